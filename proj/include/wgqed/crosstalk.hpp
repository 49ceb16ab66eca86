#pragma once

#include <cstddef>
#include <vector>

#include "wgqed/dynamics.hpp"
#include "wgqed/model.hpp"

namespace wgqed {

/// Principal-value sum  sum_m G_{m,a} G_{m,b} / (omega - Omega_m)  over the
/// discrete grid. The resonant comb term |G|^2 (pi/FSR) cot(pi x/FSR) of the
/// nearest mode is removed, which reduces to dropping that mode when omega
/// sits on it.
double mode_sum_pv(const NetworkSpec& net, std::size_t a, std::size_t b, double omega);

/// Self-consistent Lamb shift of filter j (fixed point seeded at omega_R).
double lamb_shift(const NetworkSpec& net, std::size_t j, int iterations = 3);

/// Ohmic spectral density J_j(omega) = kappa_j omega / omega_Rj.
double spectral_density(const EmitterSpec& e, double omega);

struct CrosstalkParams {
    double lamb_shift[2] = {0.0, 0.0};
    /// Bath-mediated coupling: real part sqrt(J1 J2)/2 (dissipative),
    /// imaginary part the principal-value exchange sum.
    cplx exchange{};
    cplx magnus_shift[2] = {};  // C_i; Re is a frequency shift, -2 Im a decay change
    double dressed_frequency[2] = {0.0, 0.0};  // omega_R + delta omega
    double effective_decay[2] = {0.0, 0.0};
    bool valid = true;  // false when the dressed frequencies coincide

    /// omega^D + Re C
    double shifted_frequency(std::size_t i) const { return dressed_frequency[i] + magnus_shift[i].real(); }
};

/// Effective two-filter parameters for emitters a and b of `net` (same node).
CrosstalkParams effective_crosstalk_params(const NetworkSpec& net, std::size_t a, std::size_t b);

struct DepletionOptions {
    double start_over_kappa = -20.0;  // emission window start, in units of 1/kappa_eff
    double measure_over_kappa = 20.0; // residual read-out time, capped at half the echo delay
    std::size_t control_steps = 4000;
    std::size_t refinements = 3;
    StepPolicy policy;
};

struct DepletionPoint {
    double qubit_frequency;
    double kappa_eff;
    double residual;
};

struct DepletionResult {
    double dressed_frequency = 0.0;   // argmin over detuning
    double kappa_eff = 0.0;           // argmin over kappa at the dressed frequency
    double lamb_shift = 0.0;          // dressed - bare filter frequency
    double residual = 0.0;            // depletion residual at the optimum
    std::vector<DepletionPoint> scan; // every evaluated point
};

/// Residual qubit population after a sech emission attempt by `probe`, with
/// its qubit at `qubit_frequency` and a control designed for `kappa_eff`.
double depletion_residual(const NetworkSpec& net, std::size_t probe, double qubit_frequency, double kappa_eff,
                          const DepletionOptions& opts = {});

/// Scans qubit frequency (then kappa) for the deepest depletion. The minima
/// are located by parabolic interpolation through the three lowest points
/// and refined with narrower scans.
DepletionResult depletion_spectroscopy(const NetworkSpec& net, std::size_t probe,
                                       const std::vector<double>& detuning_scan,
                                       const std::vector<double>& kappa_scan, const DepletionOptions& opts = {});

/// Vertex of the parabola through the three lowest samples. Throws
/// BracketError when the lowest sample sits on the edge of the scan.
double parabolic_minimum(const std::vector<double>& x, const std::vector<double>& y);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Mutual frequency shift of a probe filter caused by a second, empty filter
/// on the same node, measured by depletion spectroscopy against the probe
/// alone.
struct MutualShiftOptions {
    WaveguideSpec waveguide;
    double kappa = 0.0;
    double probe_frequency = 0.0;
    std::vector<double> separations_over_kappa;
    double scan_half_width_over_kappa = 0.04;
    std::size_t scan_points = 5;
    DepletionOptions depletion;
};

struct MutualShiftRow {
    double separation = 0.0;       // bare filter separation, rad/s
    double dressed_split = 0.0;    // predicted omega_2^D - omega_1^D
    double measured_frequency = 0.0;
    double measured_shift = 0.0;   // relative to the isolated probe
    double predicted_shift = 0.0;  // Re C_1
    cplx exchange_squared{};       // predicted G~^2
};

struct MutualShiftResult {
    double isolated_frequency = 0.0;  // measured omega^D of the probe alone
    double predicted_lamb_shift = 0.0;
    double bare_frequency = 0.0;
    std::vector<MutualShiftRow> rows;
    LinearFit fit;                    // measured shift vs 1 / dressed split
    double predicted_exchange_squared = 0.0;  // mean Re G~^2 over the rows
};

MutualShiftResult mutual_shift_scan(const MutualShiftOptions& opts);

/// Residual of the calibrated probe next to the residual with kappa_eff
/// scaled by (1 + error).
struct MiscalibrationResult {
    double dressed_frequency = 0.0;
    double kappa_eff = 0.0;
    double residual = 0.0;
    double residual_miscalibrated = 0.0;
};

MiscalibrationResult kappa_miscalibration(const NetworkSpec& net, std::size_t probe, double error,
                                          const DepletionOptions& opts = {});

}  // namespace wgqed
