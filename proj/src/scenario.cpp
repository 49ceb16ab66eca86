#include "wgqed/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "wgqed/analysis.hpp"
#include "wgqed/crosstalk.hpp"
#include "wgqed/csv.hpp"
#include "wgqed/errors.hpp"
#include "wgqed/planner.hpp"

namespace wgqed {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kExperiments = {"transfer_single", "transfer_double", "tomography", "spectroscopy",
                                               "scattering",      "scan",            "plan"};

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

double number(const json& j, const std::string& key, const std::string& where, std::optional<double> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        field_error(where + key, "required field is missing");
    }
    if (!j.at(key).is_number()) field_error(where + key, "must be a number");
    return j.at(key).get<double>();
}

std::string text(const json& j, const std::string& key, const std::string& where, std::optional<std::string> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        field_error(where + key, "required field is missing");
    }
    if (!j.at(key).is_string()) field_error(where + key, "must be a string");
    return j.at(key).get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& where,
                            std::optional<std::vector<double>> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        field_error(where + key, "required field is missing");
    }
    if (!j.at(key).is_array()) field_error(where + key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) field_error(where + key, "must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

double positive(double v, const std::string& field) {
    if (!(v > 0.0)) field_error(field, "must be positive");
    return v;
}

ShapeSpec parse_control(const json& c, const std::string& where, const std::string& base_dir,
                        std::vector<std::string>& warnings, bool& driven) {
    const std::string type = text(c, "type", where);
    driven = true;
    if (type == "none") {
        driven = false;
        return {};
    }
    if (type == "sech") return {};
    if (type == "ortho_n") {
        const double n = number(c, "n", where);
        if (n < 0 || n != std::floor(n)) field_error(where + "n", "must be a non-negative integer");
        return {static_cast<std::size_t>(n), 0.0, std::nullopt};
    }
    if (type == "chirped") {
        const double n = number(c, "n", where, 0.0);
        if (n < 0 || n != std::floor(n)) field_error(where + "n", "must be a non-negative integer");
        return {static_cast<std::size_t>(n), number(c, "chirp_MHz", where) * units::MHz, std::nullopt};
    }
    if (type == "file") {
        fs::path p = text(c, "path", where);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        if (!fs::exists(p)) field_error(where + "path", "control file " + p.string() + " does not exist");
        bool renormalized = false;
        ShapeSpec s;
        s.samples = read_mode_csv(p.string(), 0.0, &renormalized);
        if (renormalized) warnings.push_back("mode file " + p.string() + " was not normalized; renormalized on load");
        return s;
    }
    field_error(where + "type", "unknown control type '" + type + "' (sech, ortho_n, chirped, file, none)");
}

Calibration parse_calibration(const std::string& s) {
    if (s == "bare") return Calibration::bare;
    if (s == "effective") return Calibration::effective;
    field_error("protocol.calibration", "must be 'bare' or 'effective'");
}

Placement parse_placement(const std::string& s) {
    if (s == "as_given") return Placement::as_given;
    if (s == "on_mode") return Placement::on_mode;
    if (s == "between_modes") return Placement::between_modes;
    field_error("protocol.placement", "must be 'as_given', 'on_mode' or 'between_modes'");
}

bool needs_emitters(const std::string& experiment) {
    return experiment != "scan" && experiment != "plan" && experiment != "spectroscopy";
}

}  // namespace

ShapeSpec parse_shape_name(const std::string& name, double chirp) {
    ShapeSpec s;
    s.chirp = chirp;
    if (name == "sech") return s;
    if (name.rfind("ortho_", 0) == 0) {
        const std::string digits = name.substr(6);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
            throw ConfigError("mode: expected ortho_<n>, got '" + name + "'");
        s.order = static_cast<std::size_t>(std::stoul(digits));
        return s;
    }
    throw ConfigError("mode: expected 'sech' or 'ortho_<n>', got '" + name + "'");
}

ScenarioConfig ScenarioConfig::parse(const json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    ScenarioConfig c;
    c.source = j;
    c.experiment = text(j, "experiment", "");
    if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end())
        field_error("experiment", "unknown experiment '" + c.experiment + "'");

    const json wg = j.value("waveguide", json::object());
    c.waveguide.length = positive(number(wg, "length_m", "waveguide.", 30.0), "waveguide.length_m");
    c.waveguide.cross_section =
        positive(number(wg, "cross_section_m", "waveguide.", units::wr90_cross_section), "waveguide.cross_section_m");
    const double nm = number(wg, "n_modes", "waveguide.", 300.0);
    if (nm < 1 || nm != std::floor(nm)) field_error("waveguide.n_modes", "must be a positive integer");
    c.waveguide.n_modes = static_cast<std::size_t>(nm);
    c.waveguide.center_frequency = number(wg, "center_freq_GHz", "waveguide.", 8.9) * units::GHz;
    try {
        c.waveguide.validate();
    } catch (const ConfigError& e) {
        field_error("waveguide", e.what());
    }

    const json emitters = j.value("emitters", json::array());
    if (!emitters.is_array()) field_error("emitters", "must be an array");
    if (needs_emitters(c.experiment) && emitters.empty())
        field_error("emitters", "experiment '" + c.experiment + "' needs at least one emitter");
    for (std::size_t i = 0; i < emitters.size(); ++i) {
        const std::string where = "emitters[" + std::to_string(i) + "].";
        const json& e = emitters[i];
        NodeEmitter ne;
        const std::string node = text(e, "node", where);
        if (node != "A" && node != "B") field_error(where + "node", "must be 'A' (sender) or 'B' (receiver)");
        ne.side = node == "A" ? NodeSide::left : NodeSide::right;
        ne.filter_frequency = positive(number(e, "filter_freq_GHz", where), where + "filter_freq_GHz") * units::GHz;
        ne.qubit_frequency = number(e, "qubit_freq_GHz", where, ne.filter_frequency / units::GHz) * units::GHz;
        ne.kappa = positive(number(e, "kappa_MHz", where), where + "kappa_MHz") * units::MHz;
        bool driven = false;
        const json ctrl = e.value("control", json{{"type", "none"}});
        auto shape = parse_control(ctrl, where + "control.", base_dir, c.warnings, driven);
        if (driven) ne.shape = shape;
        c.emitters.push_back(ne);
    }

    const json pr = j.value("protocol", json::object());
    c.link.half_span_over_kappa = positive(number(pr, "t_span_over_kappa", "protocol.", 35.0), "protocol.t_span_over_kappa");
    const double steps = number(pr, "control_steps", "protocol.", 4000.0);
    if (steps < 16 || steps != std::floor(steps)) field_error("protocol.control_steps", "must be an integer >= 16");
    c.link.control_steps = static_cast<std::size_t>(steps);
    c.link.calibration = parse_calibration(text(pr, "calibration", "protocol.", "bare"));
    c.link.placement = parse_placement(text(pr, "placement", "protocol.", "as_given"));
    const json dt = pr.value("dt", json::object());
    c.evolve.policy.kappa_dt = positive(number(dt, "kappa_dt", "protocol.dt.", 1e-3), "protocol.dt.kappa_dt");
    c.evolve.policy.detuning_dt = positive(number(dt, "detuning_dt", "protocol.dt.", 0.1), "protocol.dt.detuning_dt");
    c.evolve.policy.dt_scale = positive(number(dt, "dt_scale", "protocol.dt.", 1.0), "protocol.dt.dt_scale");
    for (double ns : numbers(pr, "snapshots_ns", "protocol.", std::vector<double>{}))
        c.evolve.snapshot_times.push_back(ns * 1e-9);
    const double samples = number(pr, "n_samples", "protocol.", 400.0);
    if (samples < 1) field_error("protocol.n_samples", "must be at least 1");
    c.evolve.n_samples = static_cast<std::size_t>(samples);
    c.evolve.max_norm_drift = positive(number(pr, "max_norm_drift", "protocol.", 1e-6), "protocol.max_norm_drift");

    c.block = j.value(c.experiment, json::object());
    if (!c.block.is_object()) field_error(c.experiment, "experiment block must be an object");
    if (c.experiment == "tomography") {
        std::size_t a = 0, b = 0;
        for (const auto& e : c.emitters) (e.side == NodeSide::left ? a : b)++;
        if (a != 2 || b != 2) field_error("emitters", "tomography needs two emitters on each node");
    }
    return c;
}

json RunManifest::to_json() const {
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back({{"file", o.name}, {"fnv1a64", o.checksum}});
    return {{"tool_version", tool_version},
            {"config_hash", config_hash},
            {"experiment", experiment},
            {"outputs", outs},
            {"wall_clock_s", wall_clock},
            {"convergence", {{"dt_s", dt}, {"norm_drift", norm_drift}}},
            {"warnings", warnings},
            {"results", results},
            {"config", config}};
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    // a manifest carries the config it was produced from
    if (j.is_object() && j.contains("tool_version") && j.contains("config")) return j.at("config");
    return j;
}

Control synthesize_to_csv(const ShapeSpec& shape, double kappa, const std::string& path, double half_span_over_kappa,
                          std::size_t steps) {
    const auto mode = shape.build(kappa, half_span_over_kappa, steps);
    auto ctrl = synthesize_control(mode, kappa);
    write_mode_csv(path, mode, ctrl);
    return ctrl;
}

// ---------------------------------------------------------------- experiments

namespace {

struct Context {
    const ScenarioConfig& cfg;
    const RunOptions& run;
    RunManifest& manifest;
    fs::path dir;

    std::string file(const std::string& name) const { return (dir / name).string(); }
    void note(const Trajectory& t) {
        manifest.dt = std::max(manifest.dt, t.dt);
        manifest.norm_drift = std::max(manifest.norm_drift, t.norm_drift);
    }
};

/// Runs f(i) for i in [0, n) on up to `threads` workers; results land by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

Link scenario_link(const ScenarioConfig& cfg, LinkOptions opts) { return build_link(cfg.waveguide, cfg.emitters, opts); }

std::size_t block_index(const json& b, const std::string& key, const std::string& exp, std::size_t fallback,
                        std::size_t limit) {
    const double v = number(b, key, exp + ".", static_cast<double>(fallback));
    if (v < 0 || v != std::floor(v) || static_cast<std::size_t>(v) >= limit)
        field_error(exp + "." + key, "emitter index out of range");
    return static_cast<std::size_t>(v);
}

void run_transfer(Context& ctx, bool two_excitations) {
    const auto& cfg = ctx.cfg;
    const auto link = scenario_link(cfg, cfg.link);
    if (link.senders.empty()) field_error("emitters", "transfer needs at least one node-A emitter");
    const std::size_t ne = link.net.n_emitters();
    Trajectory traj;
    json res;
    if (!two_excitations) {
        const std::size_t init = block_index(cfg.block, "initial", cfg.experiment, link.sender(0), ne);
        traj = evolve(link.net, Sector::single, SingleExcState::qubit(link.net, init).flatten(), link.t0, link.t1,
                      cfg.evolve);
        res["initial"] = init;
    } else {
        if (link.senders.size() < 2) field_error("emitters", "transfer_double needs two node-A emitters");
        const std::size_t a = block_index(cfg.block, "first", cfg.experiment, link.sender(0), ne);
        const std::size_t b = block_index(cfg.block, "second", cfg.experiment, link.sender(1), ne);
        traj = evolve(link.net, Sector::double_, DoubleExcState::qubit_pair(link.net, a, b).amp, link.t0, link.t1,
                      cfg.evolve);
        res["initial"] = {a, b};
    }
    ctx.note(traj);
    write_trajectory_csv(ctx.file("populations.csv"), traj);
    ctx.manifest.outputs.push_back({"populations.csv", ""});
    std::vector<double> finals = traj.qubit_pop.back();
    res["final_qubit_populations"] = finals;
    if (!link.receivers.empty()) {
        const std::size_t target = block_index(cfg.block, "target", cfg.experiment, link.receiver(0), ne);
        res["target"] = target;
        res["transfer_efficiency"] = transfer_efficiency(traj, target);
    }
    res["flight_time_s"] = link.flight_time;
    res["window_s"] = {link.t0, link.t1};
    ctx.manifest.results = res;
}

void run_tomography(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto link = scenario_link(cfg, cfg.link);
    const auto rep = reconstruct_isometry(link, cfg.evolve);
    ctx.manifest.norm_drift = std::max(ctx.manifest.norm_drift, rep.norm_drift);
    CsvWriter w(ctx.file("isometry.csv"), {"out", "in", "re", "im", "abs"});
    for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t i = 0; i < 4; ++i)
            w.row(std::vector<double>{double(o), double(i), rep.A[o][i].real(), rep.A[o][i].imag(), std::abs(rep.A[o][i])});
    ctx.manifest.outputs.push_back({"isometry.csv", ""});
    const auto f = entanglement_fidelity(rep);
    const auto p = optimize_phases(rep);
    ctx.manifest.results = {{"entanglement_fidelity", f.entanglement},
                            {"average_fidelity", f.average},
                            {"optimized_fidelity", p.fidelity},
                            {"residual_phase", p.residual_phase},
                            {"leakage", rep.leakage},
                            {"single_fidelity", {single_transfer_fidelity(rep.A[1][1]), single_transfer_fidelity(rep.A[2][2])}}};
}

}  // namespace

/// One Fig. 3 style point: two channels split by `separation` around `center`.
struct ScanPoint {
    double separation_over_kappa = 0.0;
    double f2 = 0.0, f_raw = 0.0, f1a = 0.0, f1b = 0.0, overlap = 0.0, residual_phase = 0.0;
    double norm_drift = 0.0;
};

namespace {

void run_scan(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& b = cfg.block;
    const double kappa = positive(number(b, "kappa_MHz", "scan."), "scan.kappa_MHz") * units::MHz;
    const double center = number(b, "center_freq_GHz", "scan.", cfg.waveguide.center_frequency / units::GHz) * units::GHz;
    const auto seps = numbers(b, "delta_over_kappa", "scan.");
    if (seps.empty()) field_error("scan.delta_over_kappa", "needs at least one separation");
    std::vector<ScanPoint> pts(seps.size());
    parallel_for(seps.size(), ctx.run.threads, [&](std::size_t i) {
        const double d = seps[i] * kappa;
        std::vector<Channel> ch{{center - 0.5 * d, kappa, {}, std::nullopt}, {center + 0.5 * d, kappa, {}, std::nullopt}};
        const auto link = build_link(cfg.waveguide, ch, cfg.link);
        const auto rep = reconstruct_isometry(link, cfg.evolve);
        auto& p = pts[i];
        p.separation_over_kappa = seps[i];
        p.f_raw = entanglement_fidelity(rep).entanglement;
        const auto opt = optimize_phases(rep);
        p.f2 = opt.fidelity;
        p.residual_phase = opt.residual_phase;
        p.f1a = single_transfer_fidelity(rep.A[1][1]);
        p.f1b = single_transfer_fidelity(rep.A[2][2]);
        p.overlap = mode_overlap(0.0, d, kappa);
        p.norm_drift = rep.norm_drift;
    });
    CsvWriter w(ctx.file("fidelity_scan.csv"), {"delta12_over_kappa", "F2", "F1_w1", "F1_w2", "product_bound", "overlap",
                                                "F_unoptimized", "residual_phase"});
    json rows = json::array();
    for (const auto& p : pts) {
        w.row(std::vector<double>{p.separation_over_kappa, p.f2, p.f1a, p.f1b, p.f1a * p.f1b, p.overlap, p.f_raw,
                                  p.residual_phase});
        ctx.manifest.norm_drift = std::max(ctx.manifest.norm_drift, p.norm_drift);
        rows.push_back({{"delta12_over_kappa", p.separation_over_kappa}, {"F2", p.f2}});
    }
    ctx.manifest.outputs.push_back({"fidelity_scan.csv", ""});
    ctx.manifest.results = {{"points", rows}};
}

void run_scattering(Context& ctx) {
    const auto& cfg = ctx.cfg;
    LinkOptions opts = cfg.link;
    const auto link = scenario_link(cfg, opts);
    const std::size_t ne = link.net.n_emitters();
    if (link.senders.empty() || link.receivers.empty()) field_error("emitters", "scattering needs emitters on both nodes");
    const auto& b = cfg.block;
    const std::size_t src = block_index(b, "source", "scattering", link.sender(0), ne);
    const std::size_t tgt = block_index(b, "scatterer", "scattering", link.receiver(0), ne);
    const double ks = link.net.emitters[src].kappa;
    const double tb = link.emit_center + number(b, "before_over_kappa", "scattering.", 15.0) / ks;
    const double ta = link.emit_center + 2.0 * link.flight_time - number(b, "after_over_kappa", "scattering.", 15.0) / ks;
    if (!(ta > tb)) field_error("scattering", "snapshot times overlap; use a longer waveguide or a wider source filter");
    EvolveOptions eo = cfg.evolve;
    eo.snapshot_times = {tb, ta};
    auto traj = evolve(link.net, Sector::single, SingleExcState::qubit(link.net, src).flatten(), link.t0, ta, eo);
    ctx.note(traj);
    const auto before = snapshot_spectrum(traj, tb, link.net.n_modes());
    const auto after = snapshot_spectrum(traj, ta, link.net.n_modes());
    const double floor = number(b, "population_floor", "scattering.", 1e-6);
    auto ph = extract_scattering_phases(link.net.grid, link.net.frame(), before, tb, after, ta, floor);

    const auto& e = link.net.emitters[tgt];
    const double kt = e.kappa;
    const double resonance = e.filter_frequency + lamb_shift(link.net, tgt);
    // align the branch of the unwrapped phases with the model at the mode nearest resonance
    std::size_t mid = 0;
    for (std::size_t i = 0; i < ph.frequency.size(); ++i)
        if (std::abs(ph.frequency[i] - resonance) < std::abs(ph.frequency[mid] - resonance)) mid = i;
    const double ref = scattering_phase_dressed(link.net, tgt, ph.frequency[mid]);
    const double turn = 2.0 * units::pi * std::round((ref - ph.phase[mid]) / (2.0 * units::pi));

    CsvWriter w(ctx.file("scattering_phases.csv"),
                {"mode_index", "frequency_GHz", "detuning_over_kappa", "phase", "model_dressed", "model_static",
                 "population_before", "population_after"});
    double worst_dressed = 0.0, worst_static = 0.0, worst_pop = 0.0;
    for (std::size_t i = 0; i < ph.modes.size(); ++i) {
        const double w_i = ph.frequency[i];
        const double phase = ph.phase[i] + turn;
        const double dressed = scattering_phase_dressed(link.net, tgt, w_i);
        const double stat = scattering_phase_bare(w_i, resonance, kt);
        w.row(std::vector<double>{double(link.net.grid.index[ph.modes[i]]), w_i / units::GHz, (w_i - resonance) / kt,
                                  phase, dressed, stat, ph.population_before[i], ph.population_after[i]});
        worst_pop = std::max(worst_pop, std::abs(ph.population_after[i] - ph.population_before[i]));
        if (std::abs(w_i - resonance) <= 0.5 * kt) {
            worst_dressed = std::max(worst_dressed, std::abs(std::remainder(phase - dressed, 2 * units::pi)));
            worst_static = std::max(worst_static, std::abs(std::remainder(phase - stat, 2 * units::pi)));
        }
    }
    ctx.manifest.outputs.push_back({"scattering_phases.csv", ""});
    ctx.manifest.results = {{"snapshot_times_s", {tb, ta}},
                            {"resonance_GHz", resonance / units::GHz},
                            {"max_deviation_dressed_rad", worst_dressed},
                            {"max_deviation_static_rad", worst_static},
                            {"max_population_change", worst_pop}};
}

void run_spectroscopy(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& b = cfg.block;
    const auto kappas = numbers(b, "kappa_MHz", "spectroscopy.");
    const auto seps = numbers(b, "separations_over_kappa", "spectroscopy.");
    const double probe = number(b, "probe_freq_GHz", "spectroscopy.", cfg.waveguide.center_frequency / units::GHz) * units::GHz;
    const double mis = number(b, "miscalibration", "spectroscopy.", 0.01);
    DepletionOptions dep;
    dep.policy = cfg.evolve.policy;
    dep.measure_over_kappa = number(b, "measure_over_kappa", "spectroscopy.", dep.measure_over_kappa);

    std::vector<MutualShiftResult> shifts(kappas.size());
    std::vector<MiscalibrationResult> miscal(kappas.size());
    parallel_for(2 * kappas.size(), ctx.run.threads, [&](std::size_t task) {
        const std::size_t i = task / 2;
        const double k = positive(kappas[i], "spectroscopy.kappa_MHz") * units::MHz;
        if (task % 2 == 0) {
            MutualShiftOptions o;
            o.waveguide = cfg.waveguide;
            o.kappa = k;
            o.probe_frequency = probe;
            o.separations_over_kappa = seps;
            o.depletion = dep;
            o.scan_half_width_over_kappa = number(b, "scan_half_width_over_kappa", "spectroscopy.", 0.04);
            shifts[i] = mutual_shift_scan(o);
        } else {
            const auto net = make_network(cfg.waveguide, {EmitterSpec{probe, probe, k, NodeSide::left, std::nullopt}});
            miscal[i] = kappa_miscalibration(net, 0, mis, dep);
        }
    });

    CsvWriter rows(ctx.file("mutual_shift.csv"),
                   {"kappa_MHz", "separation_over_kappa", "dressed_split_MHz", "inverse_split_per_MHz",
                    "measured_shift_kHz", "predicted_shift_kHz"});
    CsvWriter fits(ctx.file("mutual_shift_fit.csv"),
                   {"kappa_MHz", "fitted_G2_MHz2", "predicted_G2_MHz2", "r_squared", "isolated_shift_kHz",
                    "predicted_lamb_shift_kHz"});
    CsvWriter mc(ctx.file("kappa_miscalibration.csv"),
                 {"kappa_MHz", "kappa_eff_over_kappa", "residual", "residual_miscalibrated", "degradation"});
    json res = json::array();
    const double mhz2 = units::MHz * units::MHz;
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        const auto& s = shifts[i];
        for (const auto& r : s.rows)
            rows.row(std::vector<double>{kappas[i], r.separation / (kappas[i] * units::MHz), r.dressed_split / units::MHz,
                                         units::MHz / r.dressed_split, r.measured_shift / units::MHz * 1e3,
                                         r.predicted_shift / units::MHz * 1e3});
        fits.row(std::vector<double>{kappas[i], s.fit.slope / mhz2, s.predicted_exchange_squared / mhz2, s.fit.r_squared,
                                     (s.isolated_frequency - s.bare_frequency) / units::MHz * 1e3,
                                     s.predicted_lamb_shift / units::MHz * 1e3});
        const auto& m = miscal[i];
        const double k = kappas[i] * units::MHz;
        mc.row(std::vector<double>{kappas[i], m.kappa_eff / k, m.residual, m.residual_miscalibrated,
                                   m.residual_miscalibrated / m.residual});
        double worst = 0.0;
        for (const auto& r : s.rows)
            worst = std::max(worst, std::abs(r.measured_shift - r.predicted_shift) / std::abs(r.predicted_shift));
        res.push_back({{"kappa_MHz", kappas[i]},
                       {"isolated_shift_kHz", (s.isolated_frequency - s.bare_frequency) / units::MHz * 1e3},
                       {"predicted_lamb_shift_kHz", s.predicted_lamb_shift / units::MHz * 1e3},
                       {"max_relative_shift_error", worst},
                       {"fitted_G2_MHz2", s.fit.slope / mhz2},
                       {"predicted_G2_MHz2", s.predicted_exchange_squared / mhz2},
                       {"r_squared", s.fit.r_squared},
                       {"miscalibration_degradation", m.residual_miscalibrated / m.residual}});
    }
    for (const char* f : {"mutual_shift.csv", "mutual_shift_fit.csv", "kappa_miscalibration.csv"})
        ctx.manifest.outputs.push_back({f, ""});
    ctx.manifest.results = {{"per_kappa", res}};
}

void run_plan(Context& ctx) {
    const auto& b = ctx.cfg.block;
    const double kappa = positive(number(b, "kappa_MHz", "plan."), "plan.kappa_MHz") * units::MHz;
    const double eps = number(b, "tolerance", "plan.", 1e-4);
    if (!(eps > 0.0 && eps < 1.0)) field_error("plan.tolerance", "must lie in (0, 1)");
    const double center = ctx.cfg.waveguide.center_frequency;
    json res;

    // infidelity vs N for several spacings, single-photon fidelity taken as given
    if (b.contains("fig4")) {
        const auto& f4 = b.at("fig4");
        const double f1 = number(f4, "single_fidelity", "plan.fig4.");
        const auto spacings = numbers(f4, "spacings_over_kappa", "plan.fig4.");
        const double nmax = number(f4, "n_max", "plan.fig4.", 100.0);
        std::vector<std::string> header{"N"};
        for (double s : spacings) header.push_back("infidelity_delta_" + format_number(s));
        CsvWriter w(ctx.file("fig4_infidelity.csv"), header);
        for (std::size_t n = 1; n <= static_cast<std::size_t>(nmax); ++n) {
            std::vector<double> row{double(n)};
            for (double s : spacings) {
                const auto freqs = equally_spaced(n, s * kappa, center);
                row.push_back(1.0 - overlap_fidelity_estimate(std::vector<double>(n, f1), freqs, kappa));
            }
            w.row(row);
        }
        ctx.manifest.outputs.push_back({"fig4_infidelity.csv", ""});
    }

    // bandwidth needed to host N emitters for each waveguide
    if (b.contains("waveguides")) {
        const double nmax = number(b, "n_max", "plan.", 100.0);
        const bool snap = b.value("snap_to_resonance", true);
        std::vector<std::string> header{"N"};
        std::vector<std::pair<double, double>> guides;  // length, single-photon infidelity
        for (std::size_t i = 0; i < b.at("waveguides").size(); ++i) {
            const auto& g = b.at("waveguides")[i];
            const std::string where = "plan.waveguides[" + std::to_string(i) + "].";
            guides.emplace_back(positive(number(g, "length_m", where), where + "length_m"),
                                number(g, "single_infidelity", where));
            header.push_back("bandwidth_GHz_" + format_number(guides.back().first) + "m");
        }
        CsvWriter w(ctx.file("fig5_bandwidth.csv"), header);
        json last = json::object();
        for (std::size_t n = 1; n <= static_cast<std::size_t>(nmax); ++n) {
            std::vector<std::string> row{std::to_string(n)};
            for (const auto& [len, inf] : guides) {
                BandwidthOptions bo;
                bo.center = center;
                if (snap) {
                    WaveguideSpec wg = ctx.cfg.waveguide;
                    wg.length = len;
                    const double vg = wg.group_velocity(wg.wavenumber(center));
                    bo.snap_spacing = units::pi * vg / len;
                }
                const auto plan = bandwidth_requirement(n, eps, [&](double) { return 1.0 - inf; }, kappa, bo);
                // unattainable points are left empty so the curve stops
                row.push_back(plan.attainable ? format_number(plan.bandwidth / units::GHz) : "");
                if (plan.attainable) last[format_number(len) + "m"] = {{"N", n}, {"bandwidth_GHz", plan.bandwidth / units::GHz}};
            }
            w.row(row);
        }
        ctx.manifest.outputs.push_back({"fig5_bandwidth.csv", ""});
        res["largest_attainable"] = last;
    }

    if (b.contains("capacity")) {
        const auto& c = b.at("capacity");
        const double f1 = number(c, "single_fidelity", "plan.capacity.");
        const double s = number(c, "spacing_over_kappa", "plan.capacity.");
        const double tol = number(c, "tolerance", "plan.capacity.", 1e-3);
        const auto r = n_max(tol, f1, s * kappa, kappa);
        res["n_max"] = r.unbounded ? json("unbounded") : json(r.count);
        if (!r.unbounded) res["bandwidth_GHz"] = static_cast<double>(r.count) * s * kappa / units::GHz;
    }
    ctx.manifest.results = res;
}

}  // namespace

RunManifest run_scenario(const json& config, const std::string& base_dir, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    auto cfg = ScenarioConfig::parse(config, base_dir);
    if (opts.dt_scale > 0.0) cfg.evolve.policy.dt_scale = opts.dt_scale;
    RunManifest m;
    m.experiment = cfg.experiment;
    m.config = config;
    m.config_hash = hex64(fnv1a(config.dump()));
    m.warnings = cfg.warnings;
    fs::create_directories(opts.out_dir);
    Context ctx{cfg, opts, m, fs::path(opts.out_dir)};
    try {
        if (cfg.experiment == "transfer_single") run_transfer(ctx, false);
        else if (cfg.experiment == "transfer_double") run_transfer(ctx, true);
        else if (cfg.experiment == "tomography") run_tomography(ctx);
        else if (cfg.experiment == "scan") run_scan(ctx);
        else if (cfg.experiment == "scattering") run_scattering(ctx);
        else if (cfg.experiment == "spectroscopy") run_spectroscopy(ctx);
        else if (cfg.experiment == "plan") run_plan(ctx);
    } catch (const Error& e) {
        // keep the error kind, add the scenario context
        throw Error(e.kind(), "experiment '" + cfg.experiment + "': " + e.what());
    }
    for (auto& o : m.outputs) o.checksum = hex64(fnv1a_file(ctx.file(o.name)));
    m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(ctx.file("manifest.json")) << m.to_json().dump(2) << "\n";
    return m;
}

RunManifest run_scenario(const std::string& config_path, const RunOptions& opts) {
    const auto j = load_config(config_path);
    return run_scenario(j, fs::path(config_path).parent_path().string(), opts);
}

}  // namespace wgqed
