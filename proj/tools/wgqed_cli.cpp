// Command-line front end: run scenarios, synthesize controls, plan capacity.
#include <algorithm>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wgqed/errors.hpp"
#include "wgqed/scenario.hpp"

using nlohmann::json;

namespace {

int report(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
    return 1;
}

// Runs a config and checks that it asks for the experiment the subcommand implies.
int run_checked(const std::string& path, const wgqed::RunOptions& opts, const std::vector<std::string>& allowed) {
    auto cfg = wgqed::load_config(path);
    if (!allowed.empty()) {
        const std::string exp = cfg.value("experiment", "");
        if (std::find(allowed.begin(), allowed.end(), exp) == allowed.end())
            throw wgqed::ConfigError("experiment: '" + exp + "' cannot be run by this subcommand");
    }
    const auto m = wgqed::run_scenario(cfg, std::filesystem::path(path).parent_path().string(), opts);
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << json{{"experiment", m.experiment},
                      {"out_dir", opts.out_dir},
                      {"wall_clock_s", m.wall_clock},
                      {"results", m.results}}
                     .dump(2)
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Waveguide QED link simulator"};
    app.set_version_flag("--version", std::string(wgqed::kToolVersion));
    app.require_subcommand(1);

    std::string config;
    wgqed::RunOptions opts;
    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config, "scenario JSON (or a manifest to re-run)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", opts.threads, "worker threads for scans")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--dt-scale", opts.dt_scale, "divide the time step by this factor")->check(CLI::PositiveNumber);
    };

    auto* run = app.add_subcommand("run", "run any scenario");
    add_run_flags(run);
    auto* scan = app.add_subcommand("scan", "two-channel fidelity scan");
    add_run_flags(scan);
    auto* plan = app.add_subcommand("plan", "multiplexing capacity and bandwidth");
    add_run_flags(plan);
    auto* spec = app.add_subcommand("spectroscopy", "depletion spectroscopy and cross-talk");
    add_run_flags(spec);

    auto* synth = app.add_subcommand("synthesize", "write the control for a photon shape");
    std::string mode = "sech", out = "control.csv";
    double kappa_mhz = 0.0, chirp_mhz = 0.0, span = 35.0;
    std::size_t steps = 4000;
    synth->add_option("--mode", mode, "sech or ortho_<n>")->capture_default_str();
    synth->add_option("--kappa-MHz", kappa_mhz, "filter linewidth")->required()->check(CLI::PositiveNumber);
    synth->add_option("--chirp-MHz", chirp_mhz, "constant carrier offset")->capture_default_str();
    synth->add_option("--span", span, "half window in units of 1/kappa")->capture_default_str();
    synth->add_option("--steps", steps, "grid steps")->capture_default_str();
    synth->add_option("--out", out, "output CSV")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_checked(config, opts, {});
        if (*scan) return run_checked(config, opts, {"scan"});
        if (*plan) return run_checked(config, opts, {"plan"});
        if (*spec) return run_checked(config, opts, {"spectroscopy"});
        if (*synth) {
            const auto shape = wgqed::parse_shape_name(mode, chirp_mhz * wgqed::units::MHz);
            wgqed::synthesize_to_csv(shape, kappa_mhz * wgqed::units::MHz, out, span, steps);
            std::cout << json{{"mode", mode}, {"out", out}}.dump() << "\n";
            return 0;
        }
    } catch (const wgqed::Error& e) {
        return report(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report("internal", e.what());
    }
    return 0;
}
