#include "wgqed/wavepacket.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wgqed/errors.hpp"
#include "wgqed/model.hpp"

namespace wgqed {

namespace {

double trapezoid(const std::vector<double>& y, double dt) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * dt;
}

// Derivative weights of the Lagrange polynomial through nodes 0..m-1 at node p.
std::vector<double> stencil_weights(int m, int p) {
    std::vector<double> w(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < m; ++j) {
        if (j == p) {
            for (int k = 0; k < m; ++k)
                if (k != p) w[static_cast<std::size_t>(j)] += 1.0 / (p - k);
            continue;
        }
        double num = 1.0, den = 1.0;
        for (int k = 0; k < m; ++k) {
            if (k == j) continue;
            den *= j - k;
            if (k != p) num *= p - k;
        }
        w[static_cast<std::size_t>(j)] = num / den;
    }
    return w;
}

// Sixth-order differences: central inside, one-sided 7-point stencils at the ends.
std::vector<double> derivative(const std::vector<double>& y, double dt) {
    const std::size_t n = y.size();
    std::vector<double> d(n, 0.0);
    if (n < 7) {
        if (n < 2) return d;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = i == 0 ? 0 : i - 1, b = std::min(n - 1, i + 1);
            d[i] = (y[b] - y[a]) / (static_cast<double>(b - a) * dt);
        }
        return d;
    }
    for (std::size_t i = 3; i + 3 < n; ++i)
        d[i] = (45.0 * (y[i + 1] - y[i - 1]) - 9.0 * (y[i + 2] - y[i - 2]) + (y[i + 3] - y[i - 3])) / (60.0 * dt);
    for (int p = 0; p < 3; ++p) {
        const auto w = stencil_weights(7, p);
        double lo = 0.0, hi = 0.0;
        for (std::size_t j = 0; j < 7; ++j) {
            lo += w[j] * y[j];
            hi -= w[j] * y[n - 1 - j];
        }
        d[static_cast<std::size_t>(p)] = lo / dt;
        d[n - 1 - static_cast<std::size_t>(p)] = hi / dt;
    }
    return d;
}

void scale_to_unit_norm(PhotonMode& mode) {
    const double n2 = mode.norm_squared();
    if (!(n2 > 0.0)) throw ResolutionError("photon mode has zero norm on the grid");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& f : mode.envelope) f *= s;
}

std::vector<double> squares(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return x * x; });
    return out;
}

}  // namespace

TimeGrid::TimeGrid(double start, double stop, std::size_t steps) : t0(start), t1(stop), n_steps(steps) {
    if (!(t0 < t1)) throw ConfigError("time grid requires t0 < t1");
    if (n_steps < 1) throw ConfigError("time grid requires at least one step");
}

TimeGrid TimeGrid::symmetric(double kappa, double half_span_over_kappa, std::size_t steps) {
    const double h = half_span_over_kappa / kappa;
    return TimeGrid(-h, h, steps);
}

std::vector<cplx> PhotonMode::samples() const {
    std::vector<cplx> out(envelope.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i);
    return out;
}

double PhotonMode::norm_squared() const { return trapezoid(squares(envelope), grid.dt()); }

std::vector<double> Control::phase() const {
    std::vector<double> phi(samples.size(), 0.0);
    double prev = 0.0;
    bool have = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (std::abs(samples[i]) == 0.0) {
            phi[i] = prev;
            continue;
        }
        double p = -std::arg(samples[i]);
        if (have) {
            while (p - prev > units::pi) p -= units::two_pi;
            while (p - prev < -units::pi) p += units::two_pi;
        }
        phi[i] = p;
        prev = p;
        have = true;
    }
    return phi;
}

cplx interpolate(const std::vector<cplx>& y, double x) {
    const std::size_t n = y.size();
    if (n == 0) return {};
    if (n == 1 || x <= 0.0) return y.front();
    if (x >= static_cast<double>(n - 1)) return y.back();
    const auto i = static_cast<std::size_t>(x);
    const double w = x - static_cast<double>(i);
    if (i == 0 || i + 2 >= n) return y[i] + w * (y[i + 1] - y[i]);
    const double a = -w * (w - 1.0) * (w - 2.0) / 6.0;
    const double b = (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0;
    const double c = -(w + 1.0) * w * (w - 2.0) / 2.0;
    const double d = (w + 1.0) * w * (w - 1.0) / 6.0;
    return a * y[i - 1] + b * y[i] + c * y[i + 1] + d * y[i + 2];
}

cplx Control::value(double t) const {
    if (t < grid.t0 || t > grid.t1 || samples.empty()) return {};
    return interpolate(samples, (t - grid.t0) / grid.dt());
}

cplx inner_product(const std::vector<cplx>& a, const std::vector<cplx>& b, double dt) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 2) return {};
    cplx s = 0.5 * (std::conj(a[0]) * b[0] + std::conj(a[n - 1]) * b[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) s += std::conj(a[i]) * b[i];
    return s * dt;
}

cplx inner_product(const PhotonMode& a, const PhotonMode& b) {
    return inner_product(a.samples(), b.samples(), a.grid.dt());
}

double mode_fidelity(const PhotonMode& a, const PhotonMode& b) { return std::norm(inner_product(a, b)); }

PhotonMode sech_mode(double kappa, const TimeGrid& grid) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    PhotonMode mode;
    mode.grid = grid;
    mode.envelope.resize(grid.size());
    mode.phase.assign(grid.size(), 0.0);
    const double amp = std::sqrt(kappa / 4.0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        mode.envelope[i] = amp / std::cosh(0.5 * kappa * grid.time(i));
    scale_to_unit_norm(mode);
    return mode;
}

std::vector<PhotonMode> orthogonal_family(double kappa, std::size_t n_max, const TimeGrid& grid) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    const double dt = grid.dt();
    std::vector<PhotonMode> family;
    family.reserve(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        PhotonMode raw;
        raw.grid = grid;
        raw.phase.assign(grid.size(), 0.0);
        raw.envelope.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = kappa * grid.time(i);
            raw.envelope[i] = std::pow(x, static_cast<double>(n)) / std::cosh(0.5 * x);
        }
        // Norm on the grid vs. every other sample: a large mismatch means the
        // grid does not resolve this mode.
        const auto sq = squares(raw.envelope);
        const double fine = trapezoid(sq, dt);
        if (grid.n_steps % 2 == 0 && grid.n_steps >= 4) {
            std::vector<double> coarse;
            for (std::size_t i = 0; i < sq.size(); i += 2) coarse.push_back(sq[i]);
            const double c = trapezoid(coarse, 2.0 * dt);
            if (std::abs(c - fine) > 1e-6 * fine) {
                std::ostringstream os;
                os << "grid too coarse to resolve mode " << n << " (relative norm error "
                   << std::abs(c - fine) / fine << ")";
                throw ResolutionError(os.str());
            }
        }
        // modified Gram-Schmidt, two passes
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& prev : family) {
                double proj = 0.0;
                {
                    std::vector<double> prod(grid.size());
                    for (std::size_t i = 0; i < prod.size(); ++i)
                        prod[i] = prev.envelope[i] * raw.envelope[i];
                    proj = trapezoid(prod, dt);
                }
                for (std::size_t i = 0; i < raw.envelope.size(); ++i)
                    raw.envelope[i] -= proj * prev.envelope[i];
            }
        }
        scale_to_unit_norm(raw);
        family.push_back(std::move(raw));
    }
    return family;
}

Control synthesize_control(const PhotonMode& mode, double kappa, const SynthesisOptions& opts) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    const auto& grid = mode.grid;
    const std::size_t n = grid.size();
    const double dt = grid.dt();
    const auto& f = mode.envelope;
    const auto& theta = mode.phase;
    const auto fdot = derivative(f, dt);
    const auto thdot = derivative(theta, dt);

    // 1 - F(t) as the tail integral of f^2 (trapezoid with end-slope
    // correction), normalized to the grid norm.
    std::vector<double> tail(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;)
        tail[i] = tail[i + 1] + 0.5 * dt * (f[i] * f[i] + f[i + 1] * f[i + 1]) -
                  dt * dt / 6.0 * (f[i + 1] * fdot[i + 1] - f[i] * fdot[i]);
    const double total = tail[0];
    if (!(total > 0.0)) throw InfeasibleWavepacket("photon mode has zero norm");

    std::vector<double> denom(n);
    for (std::size_t i = 0; i < n; ++i) denom[i] = kappa * tail[i] / total - f[i] * f[i] / total;

    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (tail[i] / total > opts.tail_floor &&
            denom[i] < -(opts.feasibility_tolerance + opts.relative_tolerance * tail[i] / total) * kappa) {
            std::ostringstream os;
            os << "wavepacket rises or falls faster than the filter allows: kappa(1-F) - f^2 = "
               << denom[i] << " at t = " << grid.time(i);
            throw InfeasibleWavepacket(os.str());
        }
    }

    const double floor = opts.clamp_threshold * kappa;
    const double scale = 1.0 / std::sqrt(total);
    Control ctrl;
    ctrl.grid = grid;
    ctrl.carrier_frame = mode.carrier;
    ctrl.samples.assign(n, cplx{});
    std::vector<bool> valid(n, false);

    // qubit phase alpha(t) = -int theta' f^2 / D
    double alpha = 0.0;
    double prev_rate = 0.0;
    bool started = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (denom[i] < floor) {
            started = false;
            continue;
        }
        const double fi = f[i] * scale;
        const double fd = fdot[i] * scale;
        const double rate = -thdot[i] * fi * fi / denom[i];
        if (started) alpha += 0.5 * dt * (rate + prev_rate);
        prev_rate = rate;
        started = true;
        const cplx num{fd + 0.5 * kappa * fi, thdot[i] * fi};
        ctrl.samples[i] = num * std::polar(1.0, theta[i] + alpha) / std::sqrt(denom[i]);
        valid[i] = true;
    }

    // Clamp the regularized points to the nearest valid sample.
    long last = -1;
    std::vector<long> left(n, -1), right(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (valid[i]) last = static_cast<long>(i);
        left[i] = last;
    }
    last = -1;
    for (std::size_t i = n; i-- > 0;) {
        if (valid[i]) last = static_cast<long>(i);
        right[i] = last;
    }
    if (left[n - 1] < 0) throw InfeasibleWavepacket("no point of the grid admits a finite control");
    for (std::size_t i = 0; i < n; ++i) {
        if (valid[i]) continue;
        const long l = left[i], r = right[i];
        long pick = l;
        if (l < 0 || (r >= 0 && (r - static_cast<long>(i)) < (static_cast<long>(i) - l))) pick = r;
        ctrl.samples[i] = ctrl.samples[static_cast<std::size_t>(pick)];
    }
    return ctrl;
}

PhotonMode chirped_mode(const PhotonMode& base, double detuning) {
    PhotonMode out = base;
    for (std::size_t i = 0; i < out.phase.size(); ++i) out.phase[i] += detuning * base.grid.time(i);
    return out;
}

Control time_reverse(const Control& ctrl) {
    Control out;
    out.grid = TimeGrid(-ctrl.grid.t1, -ctrl.grid.t0, ctrl.grid.n_steps);
    out.carrier_frame = ctrl.carrier_frame;
    out.samples.resize(ctrl.samples.size());
    const std::size_t n = ctrl.samples.size();
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = std::conj(ctrl.samples[n - 1 - i]);
    return out;
}

namespace {

// State (q, c, F) of the Markov model; F integrates kappa |c|^2.
struct MarkovState {
    cplx q, c;
    double emitted;
};

MarkovState markov_rhs(const MarkovState& s, cplx g, double kappa, cplx drive) {
    return {cplx{0, -1} * g * s.c,
            cplx{0, -1} * std::conj(g) * s.q - 0.5 * kappa * s.c + drive,
            kappa * std::norm(s.c)};
}

MarkovState axpy(const MarkovState& y, double h, const MarkovState& k) {
    return {y.q + h * k.q, y.c + h * k.c, y.emitted + h * k.emitted};
}

template <class DriveFn>
std::vector<MarkovState> integrate_markov(const Control& ctrl, double kappa, const TimeGrid& grid,
                                          MarkovState y, std::size_t substeps, DriveFn drive) {
    std::vector<MarkovState> out;
    out.reserve(grid.size());
    out.push_back(y);
    const std::size_t sub = std::max<std::size_t>(substeps, 1);
    const double h = grid.dt() / static_cast<double>(sub);
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
        for (std::size_t s = 0; s < sub; ++s) {
            const double t = grid.time(i) + h * static_cast<double>(s);
            const double frac = static_cast<double>(s) / static_cast<double>(sub);
            const double dfrac = 1.0 / static_cast<double>(sub);
            const auto k1 = markov_rhs(y, ctrl.value(t), kappa, drive(i, frac));
            const auto k2 = markov_rhs(axpy(y, 0.5 * h, k1), ctrl.value(t + 0.5 * h), kappa,
                                       drive(i, frac + 0.5 * dfrac));
            const auto k3 = markov_rhs(axpy(y, 0.5 * h, k2), ctrl.value(t + 0.5 * h), kappa,
                                       drive(i, frac + 0.5 * dfrac));
            const auto k4 = markov_rhs(axpy(y, h, k3), ctrl.value(t + h), kappa, drive(i, frac + dfrac));
            y.q += h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
            y.c += h / 6.0 * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c);
            y.emitted += h / 6.0 * (k1.emitted + 2.0 * k2.emitted + 2.0 * k3.emitted + k4.emitted);
        }
        out.push_back(y);
    }
    return out;
}

}  // namespace

MarkovEmission emit_markov(const Control& ctrl, double kappa, const TimeGrid& grid, std::size_t substeps) {
    const auto states = integrate_markov(ctrl, kappa, grid, {1.0, 0.0, 0.0}, substeps,
                                         [](std::size_t, double) { return cplx{}; });
    MarkovEmission em;
    const double rk = std::sqrt(kappa);
    em.mode.grid = grid;
    em.mode.carrier = ctrl.carrier_frame;
    for (const auto& s : states) {
        const cplx xi = cplx{0, rk} * s.c;
        em.xi.push_back(xi);
        em.qubit.push_back(s.q);
        em.filter.push_back(s.c);
        em.emitted.push_back(s.emitted);
    }
    // Split xi into a signed envelope and a continuous phase.
    em.mode.envelope.resize(em.xi.size());
    em.mode.phase.resize(em.xi.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < em.xi.size(); ++i) {
        const double mag = std::abs(em.xi[i]);
        double th = mag > 0.0 ? -std::arg(em.xi[i]) : prev;
        double sign = 1.0;
        // keep theta within pi/2 of its previous value; flip the sign of f otherwise
        while (th - prev > 0.5 * units::pi) {
            th -= units::pi;
            sign = -sign;
        }
        while (th - prev < -0.5 * units::pi) {
            th += units::pi;
            sign = -sign;
        }
        em.mode.envelope[i] = sign * mag;
        em.mode.phase[i] = th;
        prev = th;
    }
    em.leaked_norm = 1.0 - em.emitted.back();
    return em;
}

cplx absorb_markov(const Control& ctrl, double kappa, const TimeGrid& grid, const std::vector<cplx>& xi_in,
                   std::size_t substeps) {
    if (xi_in.size() != grid.size()) throw ConfigError("incoming field must be sampled on the grid");
    const double rk = std::sqrt(kappa);
    auto drive = [&](std::size_t i, double frac) {
        return cplx{0, rk} * interpolate(xi_in, static_cast<double>(i) + frac);
    };
    const auto states = integrate_markov(ctrl, kappa, grid, {0.0, 0.0, 0.0}, substeps, drive);
    return states.back().q;
}

void write_mode_csv(const std::string& path, const PhotonMode& mode, const Control& ctrl) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << "t,f,theta,g_mod,g_phase\n";
    const auto phi = ctrl.phase();
    char buf[160];
    for (std::size_t i = 0; i < mode.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", mode.grid.time(i),
                      mode.envelope[i], mode.phase[i], ctrl.modulus(i), phi[i]);
        out << buf;
    }
}

PhotonMode read_mode_csv(const std::string& path, double carrier, bool* renormalized) {
    std::ifstream in(path);
    if (!in) throw ConfigError("control file not found: " + path);
    std::string line;
    std::vector<double> t, f, th;
    bool header_checked = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!header_checked) {
            header_checked = true;
            const char c0 = line.front();
            if (!(std::isdigit(static_cast<unsigned char>(c0)) || c0 == '-' || c0 == '+' || c0 == '.'))
                continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::array<double, 3> row{0.0, 0.0, 0.0};
        int col = 0;
        while (std::getline(ss, cell, ',') && col < 3) row[col++] = std::stod(cell);
        if (col < 2) throw ConfigError("mode file " + path + " needs at least t,f columns");
        t.push_back(row[0]);
        f.push_back(row[1]);
        th.push_back(col >= 3 ? row[2] : 0.0);
    }
    if (t.size() < 3) throw ConfigError("mode file " + path + " has too few samples");
    const std::size_t steps = t.size() - 1;
    TimeGrid grid(t.front(), t.back(), steps);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::abs(t[i] - grid.time(i)) > 1e-6 * grid.dt())
            throw ConfigError("mode file " + path + " must use a uniform time grid");
    }
    PhotonMode mode;
    mode.grid = grid;
    mode.envelope = std::move(f);
    mode.phase = std::move(th);
    mode.carrier = carrier;
    const double n2 = mode.norm_squared();
    if (renormalized) *renormalized = std::abs(n2 - 1.0) > 1e-6;
    scale_to_unit_norm(mode);
    return mode;
}

}  // namespace wgqed
