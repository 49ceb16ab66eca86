#include "wgqed/crosstalk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "wgqed/errors.hpp"

namespace wgqed {

double spectral_density(const EmitterSpec& e, double omega) { return e.kappa * omega / e.filter_frequency; }

double mode_sum_pv(const NetworkSpec& net, std::size_t a, std::size_t b, double omega) {
    const auto& grid = net.grid;
    const std::size_t near = grid.nearest(omega);
    const double fsr = grid.free_spectral_range(omega);
    const double x = omega - grid.frequency[near];
    double sum = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
        if (m == near) continue;
        sum += net.couplings(m, a) * net.couplings(m, b) / (omega - grid.frequency[m]);
    }
    // Nearest mode minus the resonant part of an infinite comb through it.
    // Opposite-side pairs see alternating signs, whose comb sum is a cosecant.
    const double gg = net.couplings(near, a) * net.couplings(near, b);
    const bool alternating = net.emitters[a].side != net.emitters[b].side;
    const double u = units::pi * x / fsr;
    double residue;
    if (std::abs(u) < 1e-4) {
        // series of 1/x - (pi/F) cot(u) or 1/x - (pi/F) csc(u)
        residue = (alternating ? -u / 6.0 : u / 3.0) * units::pi / fsr;
    } else {
        const double comb = alternating ? 1.0 / std::sin(u) : 1.0 / std::tan(u);
        residue = 1.0 / x - units::pi / fsr * comb;
    }
    return sum + gg * residue;
}

double lamb_shift(const NetworkSpec& net, std::size_t j, int iterations) {
    if (j >= net.n_emitters()) throw ConfigError("emitter index out of range");
    const double bare = net.emitters[j].filter_frequency;
    double omega = bare;
    for (int it = 0; it < iterations; ++it) omega = bare + mode_sum_pv(net, j, j, omega);
    return omega - bare;
}

CrosstalkParams effective_crosstalk_params(const NetworkSpec& net, std::size_t a, std::size_t b) {
    if (a >= net.n_emitters() || b >= net.n_emitters() || a == b)
        throw ConfigError("cross-talk needs two distinct emitters of the network");
    const auto& ea = net.emitters[a];
    const auto& eb = net.emitters[b];
    if (ea.side != eb.side) throw ConfigError("cross-talk parameters are defined for filters on the same node");
    CrosstalkParams p;
    p.lamb_shift[0] = lamb_shift(net, a);
    p.lamb_shift[1] = lamb_shift(net, b);
    p.dressed_frequency[0] = ea.filter_frequency + p.lamb_shift[0];
    p.dressed_frequency[1] = eb.filter_frequency + p.lamb_shift[1];
    const double mid = 0.5 * (p.dressed_frequency[0] + p.dressed_frequency[1]);
    p.exchange = cplx{0.5 * std::sqrt(spectral_density(ea, mid) * spectral_density(eb, mid)),
                      mode_sum_pv(net, a, b, mid)};
    const double split = p.dressed_frequency[1] - p.dressed_frequency[0];
    const double kappas[2] = {ea.kappa, eb.kappa};
    const double bares[2] = {ea.filter_frequency, eb.filter_frequency};
    if (std::abs(split) <= 1e-9 * std::abs(mid)) {
        p.valid = false;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        p.magnus_shift[0] = p.magnus_shift[1] = cplx{nan, nan};
        for (int i = 0; i < 2; ++i) p.effective_decay[i] = kappas[i] * p.dressed_frequency[i] / bares[i];
        return p;
    }
    const cplx c = p.exchange * p.exchange / split;
    p.magnus_shift[0] = c;
    p.magnus_shift[1] = -c;
    for (int i = 0; i < 2; ++i)
        p.effective_decay[i] = kappas[i] * p.dressed_frequency[i] / bares[i] - 2.0 * p.magnus_shift[i].imag();
    return p;
}

// ---------------------------------------------------------------- spectroscopy

double depletion_residual(const NetworkSpec& net, std::size_t probe, double qubit_frequency, double kappa_eff,
                          const DepletionOptions& opts) {
    if (probe >= net.n_emitters()) throw ConfigError("probe emitter index out of range");
    if (!(kappa_eff > 0.0)) throw ConfigError("spectroscopy kappa must be positive");
    NetworkSpec work = net;
    auto& e = work.emitters[probe];
    e.qubit_frequency = qubit_frequency;

    Control ctrl;
    ctrl.grid = TimeGrid::symmetric(kappa_eff, 35.0, opts.control_steps);
    ctrl.carrier_frame = e.filter_frequency;
    ctrl.samples.resize(ctrl.grid.size());
    for (std::size_t i = 0; i < ctrl.grid.size(); ++i) ctrl.samples[i] = analytic_g0(kappa_eff, ctrl.grid.time(i));
    e.drive = ScheduledControl{ctrl, 0.0};
    for (std::size_t j = 0; j < work.n_emitters(); ++j)
        if (j != probe) work.emitters[j].drive.reset();

    const double vg = work.waveguide.group_velocity(work.waveguide.wavenumber(e.filter_frequency));
    const double round_trip = 2.0 * work.waveguide.length / vg;
    const double t0 = opts.start_over_kappa / kappa_eff;
    // the echo off the far end returns after one round trip; read out before
    // its leading tail reaches the probe
    const double t1 = std::min(opts.measure_over_kappa / kappa_eff, 0.5 * round_trip);
    if (!(t1 > t0)) throw ConfigError("spectroscopy window is empty");

    EvolveOptions eo;
    eo.policy = opts.policy;
    eo.n_samples = 2;
    auto traj = evolve(work, Sector::single, SingleExcState::qubit(work, probe).flatten(), t0, t1, eo);
    return std::norm(traj.final_state[probe]);
}

double parabolic_minimum(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw BracketError("need at least three scan points");
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::size_t best = 0;
    for (std::size_t k = 1; k < order.size(); ++k)
        if (y[order[k]] < y[order[best]]) best = k;
    if (best == 0 || best + 1 == order.size()) {
        std::ostringstream os;
        os << "scan does not bracket the minimum (lowest point at the edge, x = " << x[order[best]] << ")";
        throw BracketError(os.str());
    }
    const double x0 = x[order[best - 1]], x1 = x[order[best]], x2 = x[order[best + 1]];
    const double y0 = y[order[best - 1]], y1 = y[order[best]], y2 = y[order[best + 1]];
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if (den == 0.0) return x1;
    const double v = x1 - 0.5 * num / den;
    return std::clamp(v, x0, x2);
}

namespace {

// Evaluates `f` on `xs`, records into `scan`, then refines around the minimum.
template <class F>
double refine_minimum(std::vector<double> xs, std::size_t refinements, F f) {
    std::sort(xs.begin(), xs.end());
    std::vector<double> ys;
    for (double x : xs) ys.push_back(f(x));
    // slide the window while the minimum sits on its edge
    for (int shift = 0; shift < 6; ++shift) {
        const auto lo = static_cast<std::size_t>(std::min_element(ys.begin(), ys.end()) - ys.begin());
        if (lo != 0 && lo + 1 != ys.size()) break;
        const double width = xs.back() - xs.front();
        const double step = (lo == 0 ? -1.0 : 1.0) * 0.5 * width;
        std::vector<double> nx, ny;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            nx.push_back(xs[k] + step);
            ny.push_back(f(nx.back()));
        }
        xs = nx;
        ys = ny;
    }
    double best = parabolic_minimum(xs, ys);
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < xs.size(); ++k) h = std::min(h, xs[k] - xs[k - 1]);
    for (std::size_t r = 0; r < refinements; ++r) {
        h *= 0.25;
        std::vector<double> nx, ny;
        for (int k = -2; k <= 2; ++k) {
            nx.push_back(best + k * h);
            ny.push_back(f(nx.back()));
        }
        try {
            best = parabolic_minimum(nx, ny);
        } catch (const BracketError&) {
            // the coarse vertex was off by more than the refined span; re-center
            best = nx[static_cast<std::size_t>(std::min_element(ny.begin(), ny.end()) - ny.begin())];
            h *= 4.0;
        }
    }
    return best;
}

}  // namespace

DepletionResult depletion_spectroscopy(const NetworkSpec& net, std::size_t probe,
                                       const std::vector<double>& detuning_scan,
                                       const std::vector<double>& kappa_scan, const DepletionOptions& opts) {
    if (probe >= net.n_emitters()) throw ConfigError("probe emitter index out of range");
    if (detuning_scan.size() < 3) throw ConfigError("spectroscopy needs at least three qubit frequencies");
    DepletionResult res;
    const double kappa0 = net.emitters[probe].kappa;
    double kappa = kappa0;
    auto eval = [&](double w, double k) {
        const double r = depletion_residual(net, probe, w, k, opts);
        res.scan.push_back({w, k, r});
        return r;
    };
    res.dressed_frequency =
        refine_minimum(detuning_scan, opts.refinements, [&](double w) { return eval(w, kappa); });
    if (kappa_scan.size() >= 3) {
        kappa = refine_minimum(kappa_scan, opts.refinements,
                               [&](double k) { return eval(res.dressed_frequency, k); });
    }
    res.kappa_eff = kappa;
    res.lamb_shift = res.dressed_frequency - net.emitters[probe].filter_frequency;
    res.residual = eval(res.dressed_frequency, kappa);
    return res;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("line fit needs at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

MutualShiftResult mutual_shift_scan(const MutualShiftOptions& opts) {
    if (!(opts.kappa > 0.0)) throw ConfigError("spectroscopy kappa must be positive");
    if (opts.scan_points < 3) throw ConfigError("spectroscopy needs at least three scan points");
    const double k = opts.kappa;
    auto scan_around = [&](double center) {
        std::vector<double> xs;
        const double h = opts.scan_half_width_over_kappa * k;
        for (std::size_t i = 0; i < opts.scan_points; ++i)
            xs.push_back(center - h + 2.0 * h * static_cast<double>(i) / static_cast<double>(opts.scan_points - 1));
        return xs;
    };
    auto probe = [&](double filter) { return EmitterSpec{filter, filter, k, NodeSide::left, std::nullopt}; };

    MutualShiftResult res;
    res.bare_frequency = opts.probe_frequency;
    const auto alone = make_network(opts.waveguide, {probe(opts.probe_frequency)});
    res.predicted_lamb_shift = lamb_shift(alone, 0);
    res.isolated_frequency =
        depletion_spectroscopy(alone, 0, scan_around(opts.probe_frequency + res.predicted_lamb_shift), {},
                               opts.depletion)
            .dressed_frequency;

    double g2 = 0.0;
    for (double s : opts.separations_over_kappa) {
        const auto net = make_network(opts.waveguide, {probe(opts.probe_frequency), probe(opts.probe_frequency + s * k)});
        const auto p = effective_crosstalk_params(net, 0, 1);
        MutualShiftRow row;
        row.separation = s * k;
        row.dressed_split = p.dressed_frequency[1] - p.dressed_frequency[0];
        row.exchange_squared = p.exchange * p.exchange;
        row.predicted_shift = p.magnus_shift[0].real();
        row.measured_frequency =
            depletion_spectroscopy(net, 0, scan_around(p.shifted_frequency(0)), {}, opts.depletion).dressed_frequency;
        row.measured_shift = row.measured_frequency - res.isolated_frequency;
        g2 += row.exchange_squared.real();
        res.rows.push_back(row);
    }
    if (res.rows.size() >= 2) {
        std::vector<double> x, y;
        for (const auto& r : res.rows) {
            x.push_back(1.0 / r.dressed_split);
            y.push_back(r.measured_shift);
        }
        res.fit = fit_line(x, y);
        res.predicted_exchange_squared = g2 / static_cast<double>(res.rows.size());
    }
    return res;
}

MiscalibrationResult kappa_miscalibration(const NetworkSpec& net, std::size_t probe, double error,
                                          const DepletionOptions& opts) {
    const auto& e = net.emitters.at(probe);
    const double k = e.kappa;
    const double guess = e.filter_frequency + lamb_shift(net, probe);
    std::vector<double> ws, ks;
    for (int i = -2; i <= 2; ++i) {
        ws.push_back(guess + 0.02 * k * i);
        ks.push_back(k * (1.0 + 0.01 * i));
    }
    const auto cal = depletion_spectroscopy(net, probe, ws, ks, opts);
    MiscalibrationResult r;
    r.dressed_frequency = cal.dressed_frequency;
    r.kappa_eff = cal.kappa_eff;
    r.residual = cal.residual;
    r.residual_miscalibrated = depletion_residual(net, probe, cal.dressed_frequency, cal.kappa_eff * (1.0 + error), opts);
    return r;
}

}  // namespace wgqed
