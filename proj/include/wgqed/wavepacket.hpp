#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace wgqed {

using cplx = std::complex<double>;

/// Uniform time grid with n_steps intervals (n_steps + 1 samples).
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    std::size_t n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double start, double stop, std::size_t steps);

    double dt() const { return (t1 - t0) / static_cast<double>(n_steps); }
    std::size_t size() const { return n_steps + 1; }
    double time(std::size_t i) const { return t0 + dt() * static_cast<double>(i); }
    double span() const { return t1 - t0; }

    /// Default protocol grid: (-35/kappa, +35/kappa) with 4000 steps.
    static TimeGrid symmetric(double kappa, double half_span_over_kappa = 35.0,
                              std::size_t steps = 4000);
};

/// xi(t) = f(t) exp(-i theta(t)). The sign of the wavepacket lives in f, so
/// theta stays continuous across zeros of the envelope.
struct PhotonMode {
    TimeGrid grid;
    std::vector<double> envelope;  // f, may be negative
    std::vector<double> phase;     // theta
    double carrier = 0.0;

    cplx value(std::size_t i) const { return envelope[i] * std::polar(1.0, -phase[i]); }
    std::vector<cplx> samples() const;
    double norm_squared() const;
};

/// Complex qubit-filter coupling g(t) = |g(t)| exp(-i phi(t)). `samples`
/// holds the coefficient of sigma^+ a in the Hamiltonian.
struct Control {
    TimeGrid grid;
    std::vector<cplx> samples;
    double carrier_frame = 0.0;

    double modulus(std::size_t i) const { return std::abs(samples[i]); }
    /// Unwrapped phi(t) on the grid.
    std::vector<double> phase() const;
    /// Cubic interpolation between samples; zero outside the grid.
    cplx value(double t) const;
};

/// Four-point cubic Lagrange interpolation at fractional index x, linear in
/// the first and last interval. x is clamped to [0, size-1].
cplx interpolate(const std::vector<cplx>& samples, double x);

/// Trapezoidal <a, b> = int a*(t) b(t) dt over a shared grid.
cplx inner_product(const std::vector<cplx>& a, const std::vector<cplx>& b, double dt);
cplx inner_product(const PhotonMode& a, const PhotonMode& b);
/// |<a, b>|^2
double mode_fidelity(const PhotonMode& a, const PhotonMode& b);

PhotonMode sech_mode(double kappa, const TimeGrid& grid);

/// xi_0 .. xi_{n_max}: sech, the odd sech*t mode, then Gram-Schmidt on sech*t^n.
std::vector<PhotonMode> orthogonal_family(double kappa, std::size_t n_max, const TimeGrid& grid);

struct SynthesisOptions {
    /// A point is infeasible when kappa(1-F) - f^2 falls below
    /// -(feasibility_tolerance + relative_tolerance (1-F)) * kappa. The relative
    /// part absorbs quadrature error in the tails, where both terms vanish.
    double feasibility_tolerance = 1e-9;
    double relative_tolerance = 1e-3;
    /// Points whose remaining photon fraction 1-F is below this are not
    /// checked; grid truncation dominates there and they are clamped.
    double tail_floor = 1e-5;
    /// Denominators below this fraction of kappa are clamped to the nearest
    /// interior value.
    double clamp_threshold = 1e-12;
};

Control synthesize_control(const PhotonMode& mode, double kappa, const SynthesisOptions& opts = {});

PhotonMode chirped_mode(const PhotonMode& base, double detuning);

/// Absorption control for the photon emitted by `ctrl`: g(t) -> g(-t)^*.
Control time_reverse(const Control& ctrl);

struct MarkovEmission {
    PhotonMode mode;              // raw xi = i sqrt(kappa) c, not renormalized
    std::vector<cplx> xi;
    std::vector<cplx> qubit;      // q(t)
    std::vector<cplx> filter;     // c(t)
    std::vector<double> emitted;  // F(t) = int |xi|^2
    double leaked_norm = 0.0;     // 1 - emitted(T)
};

/// Two-level Markov model (qubit + leaky filter, rate kappa) in the filter's
/// rotating frame, started with the qubit excited.
MarkovEmission emit_markov(const Control& ctrl, double kappa, const TimeGrid& grid,
                           std::size_t substeps = 4);

/// Markov model started from (q0, c0) and driven by an incoming field
/// xi_in(t) (sampled on `grid`). Returns the final qubit amplitude.
cplx absorb_markov(const Control& ctrl, double kappa, const TimeGrid& grid,
                   const std::vector<cplx>& xi_in, std::size_t substeps = 4);

/// Closed-form controls for xi_0 and xi_1 (signed, real).
double analytic_g0(double kappa, double t);
double analytic_g1(double kappa, double t);

/// Writes t, f, theta, g_mod, g_phase with 17 significant digits.
void write_mode_csv(const std::string& path, const PhotonMode& mode, const Control& ctrl);

/// Reads a t,f[,theta] CSV onto its own grid; renormalizes. Sets `renormalized`
/// when the input norm differed from 1 by more than 1e-6.
PhotonMode read_mode_csv(const std::string& path, double carrier, bool* renormalized = nullptr);

/// Real-argument dilogarithm Li_2(x), x <= 1.
double dilog(double x);

}  // namespace wgqed
