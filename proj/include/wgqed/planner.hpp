#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace wgqed {

/// Two-photon correction factors G(D) = F2 / (F1 F1) on a separation grid,
/// plus a sampled single-photon fidelity curve F1(omega).
struct PairCorrectionTable {
    std::vector<double> separation;  // rad/s, ascending, from 0
    std::vector<double> correction;
    std::vector<double> f1_frequency;  // rad/s, ascending
    std::vector<double> f1_value;

    /// Linear interpolation; beyond the last separation the last value is used.
    double pair_correction(double separation) const;
    /// Linear interpolation; outside the sampled band throws ExtrapolationError.
    double single_fidelity(double omega) const;
    void validate() const;
};

/// Product of F1(omega_i) and G over every pair.
double fidelity_estimate(const PairCorrectionTable& table, const std::vector<double>& frequencies);

/// Product of F1 and (1 - |<xi_i|xi_j>|^2) over every pair of sech modes.
double overlap_fidelity_estimate(const std::vector<double>& f1, const std::vector<double>& frequencies,
                                 double kappa);

struct NMax {
    std::size_t count = 0;
    bool unbounded = false;  // F1 (1 - I) == 1
};

/// floor(log(1 - eps) / log(F1 (1 - I(D)))).
NMax n_max(double tolerance, double f1, double spacing, double kappa);

/// N frequencies spaced by `spacing`, centered on `center`.
std::vector<double> equally_spaced(std::size_t n, double spacing, double center);

struct CapacityPlan {
    std::size_t n = 0;
    double spacing = 0.0;
    std::vector<double> frequencies;
    double estimated_fidelity = 0.0;
    double bandwidth = 0.0;  // n * spacing
    double tolerance = 0.0;
    bool attainable = false;
};

struct BandwidthOptions {
    double center = 0.0;
    double step_over_kappa = 0.01;   // scan resolution when not snapping
    double max_spacing_over_kappa = 100.0;
    /// When positive, spacings are restricted to multiples of this value
    /// (emitters snapped to waveguide resonances one FSR apart).
    double snap_spacing = 0.0;
};

/// Smallest N * D for which the overlap estimate reaches 1 - eps. Not
/// attainable when the single-photon budget alone, 1 - prod F1, exceeds eps.
CapacityPlan bandwidth_requirement(std::size_t n, double tolerance, const std::function<double(double)>& f1,
                                   double kappa, const BandwidthOptions& opts);

}  // namespace wgqed
