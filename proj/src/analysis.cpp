#include "wgqed/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wgqed/crosstalk.hpp"
#include "wgqed/errors.hpp"

namespace wgqed {

double transfer_efficiency(const Trajectory& traj, std::size_t target_qubit) {
    if (traj.qubit_pop.empty()) return 0.0;
    const auto& last = traj.qubit_pop.back();
    if (target_qubit >= last.size()) throw ConfigError("target qubit index out of range");
    return last[target_qubit];
}

namespace {

// Rotating frame -> qubit frame for an amplitude that started at t0 in a
// state of energy e_in and ends at t1 in a state of energy e_out.
cplx to_qubit_frame(cplx a, double e_in, double e_out, double frame_energy, double t0, double t1) {
    return a * std::polar(1.0, (e_out - frame_energy) * t1 - (e_in - frame_energy) * t0);
}

}  // namespace

cplx channel_amplitude(const Link& link, const Trajectory& traj, std::size_t channel) {
    if (traj.sector != Sector::single) throw ConfigError("channel amplitude needs a single-excitation run");
    const auto& em = link.net.emitters;
    const std::size_t tx = link.sender(channel), rx = link.receiver(channel);
    return to_qubit_frame(traj.final_state[rx], em[tx].qubit_frequency, em[rx].qubit_frequency, traj.frame,
                          traj.t0(), traj.t1());
}

IsometryReport reconstruct_isometry(const Link& link, const EvolveOptions& opts) {
    if (link.n_channels != 2) throw ConfigError("isometry reconstruction needs a two-channel link");
    if (link.t1 - link.t0 < link.flight_time) throw ConfigError("protocol window is shorter than the photon flight time");
    const auto& net = link.net;
    const auto& em = net.emitters;
    const double frame = net.frame();
    IsometryReport rep;
    rep.A[0][0] = 1.0;

    for (std::size_t in = 0; in < 2; ++in) {
        auto traj = evolve(net, Sector::single, SingleExcState::qubit(net, link.sender(in)).flatten(), link.t0,
                           link.t1, opts);
        rep.norm_drift = std::max(rep.norm_drift, traj.norm_drift);
        for (std::size_t out = 0; out < 2; ++out) {
            const std::size_t rx = link.receiver(out);
            rep.A[1 + out][1 + in] = to_qubit_frame(traj.final_state[rx], em[link.sender(in)].qubit_frequency,
                                                    em[rx].qubit_frequency, frame, link.t0, link.t1);
        }
    }
    {
        auto s0 = DoubleExcState::qubit_pair(net, link.sender(0), link.sender(1));
        auto traj = evolve(net, Sector::double_, s0.amp, link.t0, link.t1, opts);
        rep.norm_drift = std::max(rep.norm_drift, traj.norm_drift);
        const double e_in = em[link.sender(0)].qubit_frequency + em[link.sender(1)].qubit_frequency;
        const double e_out = em[link.receiver(0)].qubit_frequency + em[link.receiver(1)].qubit_frequency;
        rep.A[3][3] = to_qubit_frame(traj.final_state[s0.layout.qq(link.receiver(0), link.receiver(1))], e_in, e_out,
                                     2.0 * frame, link.t0, link.t1);
    }
    for (std::size_t in = 0; in < 4; ++in) {
        double s = 0.0;
        for (std::size_t out = 0; out < 4; ++out) s += std::norm(rep.A[out][in]);
        rep.leakage[in] = std::max(0.0, 1.0 - s);
    }
    return rep;
}

FidelityReport entanglement_fidelity(const IsometryReport& report) {
    cplx tr{};
    for (std::size_t i = 0; i < 4; ++i) tr += report.A[i][i];
    FidelityReport f;
    f.entanglement = std::norm(tr / 4.0);
    f.average = (4.0 * f.entanglement + 1.0) / 5.0;
    return f;
}

namespace {

double phased_fidelity(const IsometryReport& r, double a, double b) {
    const cplx s = r.A[0][0] + r.A[1][1] * std::polar(1.0, a) + r.A[2][2] * std::polar(1.0, b) +
                   r.A[3][3] * std::polar(1.0, a + b);
    return std::norm(s) / 16.0;
}

double wrap(double x) { return std::remainder(x, 2.0 * units::pi); }

}  // namespace

PhaseOptimization optimize_phases(const IsometryReport& report) {
    const auto& A = report.A;
    const double floor = 1e-12;
    std::vector<std::pair<double, double>> seeds;
    const bool degenerate = std::abs(A[1][1]) < floor || std::abs(A[2][2]) < floor;
    if (!degenerate) {
        const double ref = std::arg(A[0][0]);
        seeds.push_back({ref - std::arg(A[1][1]), ref - std::arg(A[2][2])});
    } else {
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) seeds.push_back({i * units::pi / 4.0, j * units::pi / 4.0});
    }
    PhaseOptimization best;
    best.fidelity = -1.0;
    for (auto [a, b] : seeds) {
        // exact coordinate ascent: for fixed b, |X + Y e^{ia}| peaks at a = arg X - arg Y
        for (int it = 0; it < 200; ++it) {
            const double a_prev = a, b_prev = b;
            {
                const cplx X = A[0][0] + A[2][2] * std::polar(1.0, b);
                const cplx Y = A[1][1] + A[3][3] * std::polar(1.0, b);
                if (std::abs(Y) > 0.0) a = std::arg(X) - std::arg(Y);
            }
            {
                const cplx X = A[0][0] + A[1][1] * std::polar(1.0, a);
                const cplx Y = A[2][2] + A[3][3] * std::polar(1.0, a);
                if (std::abs(Y) > 0.0) b = std::arg(X) - std::arg(Y);
            }
            if (std::abs(wrap(a - a_prev)) < 1e-15 && std::abs(wrap(b - b_prev)) < 1e-15) break;
        }
        const double f = phased_fidelity(report, a, b);
        if (f > best.fidelity) {
            best.fidelity = f;
            best.alpha = wrap(a);
            best.beta = wrap(b);
        }
    }
    best.residual_phase = wrap(std::arg(A[3][3]) - std::arg(A[1][1]) - std::arg(A[2][2]) + std::arg(A[0][0]));
    return best;
}

double single_transfer_fidelity(cplx a) {
    const double v = 0.5 * (1.0 + std::abs(a));
    return v * v;
}

double mode_overlap(double omega1, double omega2, double kappa) {
    if (!(kappa > 0.0)) throw ConfigError("mode overlap needs a positive kappa");
    const double x = units::pi * std::abs(omega2 - omega1) / kappa;
    if (x < 1e-8) return 1.0 - x * x / 3.0;
    if (x > 350.0) return 4.0 * x * x * std::exp(-2.0 * x);
    const double r = x / std::sinh(x);
    return r * r;
}

double mode_overlap_quadrature(double omega1, double omega2, double kappa1, double kappa2,
                               double half_span_over_kappa, std::size_t steps) {
    const double kmin = std::min(kappa1, kappa2);
    const auto grid = TimeGrid::symmetric(kmin, half_span_over_kappa, steps);
    const double dw = omega2 - omega1;
    cplx acc{};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.time(i);
        const double a = 0.5 * std::sqrt(kappa1) / std::cosh(0.5 * kappa1 * t);
        const double b = 0.5 * std::sqrt(kappa2) / std::cosh(0.5 * kappa2 * t);
        const double w = (i == 0 || i + 1 == grid.size()) ? 0.5 : 1.0;
        acc += w * a * b * std::polar(1.0, -dw * t);
    }
    return std::norm(acc * grid.dt());
}

double scattering_phase_bare(double omega, double resonance, double kappa) {
    // arg[(i x + k/2) / (i x - k/2)] = pi + 2 atan(2x/k), continuous in x
    return units::pi + 2.0 * std::atan(2.0 * (omega - resonance) / kappa);
}

double scattering_phase_dressed(const NetworkSpec& net, std::size_t j, double omega) {
    const auto& e = net.emitters.at(j);
    return scattering_phase_bare(omega, e.filter_frequency + mode_sum_pv(net, j, j, omega), spectral_density(e, omega));
}

void unwrap(std::vector<double>& phase) {
    for (std::size_t i = 1; i < phase.size(); ++i) {
        const double d = phase[i] - phase[i - 1];
        phase[i] -= 2.0 * units::pi * std::round(d / (2.0 * units::pi));
    }
}

ScatteringPhases extract_scattering_phases(const ModeGrid& grid, double frame, const std::vector<cplx>& before,
                                           double t_before, const std::vector<cplx>& after, double t_after,
                                           double floor) {
    if (before.size() != grid.size() || after.size() != grid.size())
        throw ConfigError("snapshot size does not match the mode grid");
    double peak = 0.0;
    for (auto x : before) peak = std::max(peak, std::norm(x));
    ScatteringPhases out;
    const double dt = t_after - t_before;
    for (std::size_t m = 0; m < grid.size(); ++m) {
        const double pb = std::norm(before[m]), pa = std::norm(after[m]);
        if (!(pb > floor * peak) || !(pa > floor * peak)) continue;
        const cplx r = after[m] / before[m] * std::polar(1.0, (grid.frequency[m] - frame) * dt);
        out.modes.push_back(m);
        out.frequency.push_back(grid.frequency[m]);
        out.phase.push_back(std::arg(r));
        out.population_before.push_back(pb);
        out.population_after.push_back(pa);
    }
    if (out.modes.empty()) throw EmptyResult("no mode is populated above the floor in both snapshots");
    unwrap(out.phase);
    return out;
}

}  // namespace wgqed
