#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "wgqed/dynamics.hpp"
#include "wgqed/protocols.hpp"

namespace wgqed {

inline constexpr const char* kToolVersion = "wgqed 0.1.0";

/// Parsed scenario. Field names carry their units (..._GHz, ..._MHz, ..._m);
/// frequencies are ordinary frequencies and are stored here as rad/s.
struct ScenarioConfig {
    std::string experiment;
    WaveguideSpec waveguide;
    std::vector<NodeEmitter> emitters;
    LinkOptions link;
    EvolveOptions evolve;
    nlohmann::json block;  // experiment-specific settings
    nlohmann::json source; // the config as given
    std::vector<std::string> warnings;

    /// `base_dir` resolves relative control-file paths.
    static ScenarioConfig parse(const nlohmann::json& j, const std::string& base_dir = ".");
};

struct OutputFile {
    std::string name;
    std::string checksum;  // FNV-1a 64, hex
};

struct RunManifest {
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::string experiment;
    std::vector<OutputFile> outputs;
    double wall_clock = 0.0;
    double dt = 0.0;
    double norm_drift = 0.0;
    std::vector<std::string> warnings;
    nlohmann::json results;
    nlohmann::json config;

    nlohmann::json to_json() const;
};

struct RunOptions {
    std::string out_dir = "out";
    std::size_t threads = 1;
    double dt_scale = 0.0;  // overrides the config's dt_scale when positive
};

/// Loads a config (or a manifest, whose embedded config is re-run).
nlohmann::json load_config(const std::string& path);

RunManifest run_scenario(const std::string& config_path, const RunOptions& opts = {});
RunManifest run_scenario(const nlohmann::json& config, const std::string& base_dir, const RunOptions& opts = {});

/// Writes the control CSV for a family member or chirped mode; returns the control.
Control synthesize_to_csv(const ShapeSpec& shape, double kappa, const std::string& path,
                          double half_span_over_kappa = 35.0, std::size_t steps = 4000);

/// Parses "sech", "ortho_<n>" into a shape (chirp in rad/s).
ShapeSpec parse_shape_name(const std::string& name, double chirp = 0.0);

}  // namespace wgqed
