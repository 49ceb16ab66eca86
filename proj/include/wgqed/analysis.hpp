#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "wgqed/dynamics.hpp"
#include "wgqed/protocols.hpp"

namespace wgqed {

/// |q_target(T)|^2 at the last sample.
double transfer_efficiency(const Trajectory& traj, std::size_t target_qubit);

/// Amplitudes of the d = 4 two-qubit isometry in the basis |00>, |10>, |01>,
/// |11> (first digit: first channel). A[out][in] is the amplitude on the
/// receiving node given the input at the sending node, in the frame of the
/// qubit energies.
struct IsometryReport {
    std::array<std::array<cplx, 4>, 4> A{};
    std::array<double, 4> leakage{};
    double norm_drift = 0.0;  // worst over the runs
};

IsometryReport reconstruct_isometry(const Link& link, const EvolveOptions& opts = {});

/// Sender->receiver amplitude of channel i in the qubit frame, from a single
/// excitation run started at t0 with sender i excited.
cplx channel_amplitude(const Link& link, const Trajectory& traj, std::size_t channel);

struct FidelityReport {
    double entanglement = 0.0;  // |Tr(U_ideal^dag U) / d|^2
    double average = 0.0;       // (d F + 1) / (d + 1)
};

FidelityReport entanglement_fidelity(const IsometryReport& report);

struct PhaseOptimization {
    double fidelity = 0.0;  // F2 after local phase corrections
    double alpha = 0.0;     // phase applied to the first qubit
    double beta = 0.0;      // phase applied to the second qubit
    double residual_phase = 0.0;  // arg A33 - arg A11 - arg A22 (wrapped)
};

/// Maximizes the entanglement fidelity over local Z rotations on the receiver.
PhaseOptimization optimize_phases(const IsometryReport& report);

/// d = 2 single-qubit transfer fidelity with the phase of `a` corrected.
double single_transfer_fidelity(cplx a);

/// |<xi(w1)|xi(w2)>|^2 for equal-kappa sech modes: ((pi D/k) / sinh(pi D/k))^2.
double mode_overlap(double omega1, double omega2, double kappa);

/// The same overlap by trapezoidal quadrature, allowing unequal decay rates.
double mode_overlap_quadrature(double omega1, double omega2, double kappa1, double kappa2,
                               double half_span_over_kappa = 60.0, std::size_t steps = 24000);

/// Reflection phase of a bare resonator, continuous in omega, in (0, 2 pi).
double scattering_phase_bare(double omega, double resonance, double kappa);

/// Reflection phase of filter j of `net` with its resonance dressed by the
/// principal-value self-energy evaluated at omega and its decay J_j(omega).
double scattering_phase_dressed(const NetworkSpec& net, std::size_t j, double omega);

struct ScatteringPhases {
    std::vector<std::size_t> modes;  // grid indices
    std::vector<double> frequency;
    std::vector<double> phase;       // unwrapped across the reported modes
    std::vector<double> population_before, population_after;
};

/// arg(psi_after / psi_before) per mode with the free rotating-frame phases
/// removed; modes below floor * peak population are skipped.
ScatteringPhases extract_scattering_phases(const ModeGrid& grid, double frame, const std::vector<cplx>& before,
                                           double t_before, const std::vector<cplx>& after, double t_after,
                                           double floor = 1e-6);

void unwrap(std::vector<double>& phase);

}  // namespace wgqed
