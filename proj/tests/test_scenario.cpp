#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "wgqed/crosstalk.hpp"
#include "wgqed/errors.hpp"
#include "wgqed/csv.hpp"
#include "wgqed/scenario.hpp"

#include <sstream>

using namespace wgqed;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json transfer_config() {
    return json::parse(R"({
      "experiment": "transfer_single",
      "waveguide": {"length_m": 5, "n_modes": 60, "center_freq_GHz": 8.9},
      "emitters": [
        {"node": "A", "filter_freq_GHz": 8.9, "kappa_MHz": 20, "control": {"type": "sech"}},
        {"node": "B", "filter_freq_GHz": 8.9, "kappa_MHz": 20, "control": {"type": "sech"}}
      ],
      "protocol": {"calibration": "effective"}
    })");
}

json plan_config() {
    return json::parse(R"({
      "experiment": "plan",
      "waveguide": {"length_m": 15, "n_modes": 500},
      "plan": {"kappa_MHz": 10, "tolerance": 1e-4, "n_max": 12,
               "fig4": {"single_fidelity": 0.99999, "spacings_over_kappa": [2, 6], "n_max": 12},
               "waveguides": [{"length_m": 30, "single_infidelity": 1e-5}],
               "capacity": {"single_fidelity": 0.99999, "spacing_over_kappa": 6}}
    })");
}

std::string error_of(const json& cfg) {
    try {
        ScenarioConfig::parse(cfg, ".");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("wgqed_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("validation errors name the offending field") {
    auto c = transfer_config();
    c["emitters"][1]["kappa_MHz"] = -3;
    CHECK(error_of(c).find("emitters[1].kappa_MHz") != std::string::npos);

    c = transfer_config();
    c["emitters"] = json::array();
    CHECK(error_of(c).find("emitters") == 0);

    c = transfer_config();
    c["emitters"][0]["control"] = {{"type", "triangle"}};
    CHECK(error_of(c).find("emitters[0].control.type") != std::string::npos);

    c = transfer_config();
    c["emitters"][0]["control"] = {{"type", "file"}, {"path", "does/not/exist.csv"}};
    CHECK(error_of(c).find("emitters[0].control.path") != std::string::npos);

    c = transfer_config();
    c["waveguide"]["n_modes"] = 2.5;
    CHECK(error_of(c).find("waveguide.n_modes") != std::string::npos);

    c = transfer_config();
    c["experiment"] = "teleport";
    CHECK(error_of(c).find("experiment") == 0);

    c = transfer_config();
    c["protocol"]["calibration"] = "magic";
    CHECK(error_of(c).find("protocol.calibration") != std::string::npos);

    c = transfer_config();
    c["emitters"][0]["filter_freq_GHz"] = 12.0;
    CHECK_THROWS_AS(run_scenario(c, ".", {scratch("window").string()}), Error);

    CHECK(error_of(transfer_config()).empty());
}

TEST_CASE("tomography requires two emitters per node") {
    auto c = transfer_config();
    c["experiment"] = "tomography";
    CHECK(error_of(c).find("emitters") == 0);
}

TEST_CASE("control files are loaded and renormalized") {
    const auto dir = scratch("ctrl");
    fs::create_directories(dir);
    ShapeSpec s;
    synthesize_to_csv(s, 20 * units::MHz, (dir / "sech.csv").string());
    // scale the envelope column by 2
    std::ifstream in(dir / "sech.csv");
    std::ofstream out(dir / "scaled.csv");
    std::string line;
    std::getline(in, line);
    out << line << "\n";
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string t, f, rest;
        std::getline(ss, t, ',');
        std::getline(ss, f, ',');
        std::getline(ss, rest);
        out << t << "," << format_number(2 * std::stod(f)) << "," << rest << "\n";
    }
    out.close();
    auto c = transfer_config();
    c["emitters"][0]["control"] = {{"type", "file"}, {"path", "scaled.csv"}};
    const auto cfg = ScenarioConfig::parse(c, dir.string());
    REQUIRE(cfg.warnings.size() == 1);
    CHECK(cfg.warnings[0].find("renormalized") != std::string::npos);
}

TEST_CASE("transfer scenario writes outputs and a manifest") {
    const auto dir = scratch("transfer");
    RunOptions opts;
    opts.out_dir = dir.string();
    const auto m = run_scenario(transfer_config(), ".", opts);
    CHECK(m.results["transfer_efficiency"].get<double>() > 0.99);
    CHECK(m.norm_drift < 1e-8);
    REQUIRE(m.outputs.size() == 1);
    CHECK(m.outputs[0].checksum == hex64(fnv1a_file((dir / "populations.csv").string())));
    const auto table = read_csv((dir / "populations.csv").string());
    CHECK(table.header == std::vector<std::string>{"t", "q1", "q2", "c1", "c2"});

    // a manifest re-runs to identical outputs
    const auto again = scratch("transfer_rerun");
    opts.out_dir = again.string();
    const auto m2 = run_scenario((dir / "manifest.json").string(), opts);
    CHECK(m2.config_hash == m.config_hash);
    CHECK(m2.outputs[0].checksum == m.outputs[0].checksum);
}

TEST_CASE("plan scenario is deterministic") {
    RunOptions a, b;
    a.out_dir = scratch("plan_a").string();
    b.out_dir = scratch("plan_b").string();
    b.threads = 3;
    const auto ma = run_scenario(plan_config(), ".", a);
    const auto mb = run_scenario(plan_config(), ".", b);
    REQUIRE(ma.outputs.size() == 2);
    for (std::size_t i = 0; i < ma.outputs.size(); ++i) CHECK(ma.outputs[i].checksum == mb.outputs[i].checksum);
    CHECK(ma.results["largest_attainable"]["30m"]["N"] == 10);
    const auto f5 = read_csv((fs::path(a.out_dir) / "fig5_bandwidth.csv").string());
    CHECK(f5.rows.size() == 12);
    CHECK(std::isnan(f5.rows[10][1]));
}

TEST_CASE("shape names") {
    CHECK(parse_shape_name("sech").order == 0);
    CHECK(parse_shape_name("ortho_3").order == 3);
    CHECK_THROWS_AS(parse_shape_name("ortho_"), ConfigError);
    CHECK_THROWS_AS(parse_shape_name("gauss"), ConfigError);
}

TEST_CASE("link geometry and placement") {
    WaveguideSpec wg;
    const double k = 20 * units::MHz;
    std::vector<Channel> ch{{8.9 * units::GHz, k, {}, std::nullopt}};
    const auto link = build_link(wg, ch);
    const double vg = wg.group_velocity(wg.wavenumber(8.9 * units::GHz));
    CHECK(link.flight_time == doctest::Approx(wg.length / vg));
    CHECK(link.emit_center == doctest::Approx(-0.5 * link.flight_time));
    CHECK(link.t1 - link.t0 == doctest::Approx(link.flight_time + 70 / k));
    CHECK(link.net.emitters[0].side == NodeSide::left);
    CHECK(link.net.emitters[1].side == NodeSide::right);

    LinkOptions on;
    on.placement = Placement::on_mode;
    const auto snapped = build_link(wg, ch, on);
    const auto& g = snapped.net.grid;
    const double w = snapped.net.emitters[0].filter_frequency;
    CHECK(w == g.frequency[g.nearest(w)]);
    on.placement = Placement::between_modes;
    const auto mid = build_link(wg, ch, on);
    const double wm = mid.net.emitters[0].filter_frequency;
    const std::size_t i = g.nearest(wm);
    CHECK(std::abs(std::abs(wm - g.frequency[i]) - 0.5 * g.free_spectral_range(wm)) < 1e-3 * g.free_spectral_range(wm));

    LinkOptions eff;
    eff.calibration = Calibration::effective;
    const auto cal = build_link(wg, ch, eff);
    const double shift = lamb_shift(cal.net, 0);
    CHECK(cal.net.emitters[0].qubit_frequency - cal.net.emitters[0].filter_frequency == doctest::Approx(shift).epsilon(1e-6));
}
