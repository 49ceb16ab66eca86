#include "wgqed/planner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wgqed/analysis.hpp"
#include "wgqed/errors.hpp"

namespace wgqed {

namespace {

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double v) {
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    if (it == x.begin()) return y.front();
    if (it == x.end()) return y.back();
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double w = (v - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * y[i - 1] + w * y[i];
}

}  // namespace

void PairCorrectionTable::validate() const {
    if (separation.empty() || separation.size() != correction.size())
        throw ConfigError("pair correction table needs matching separation and correction columns");
    if (f1_frequency.empty() || f1_frequency.size() != f1_value.size())
        throw ConfigError("pair correction table needs a single-photon fidelity curve");
    if (!std::is_sorted(separation.begin(), separation.end()) || !std::is_sorted(f1_frequency.begin(), f1_frequency.end()))
        throw ConfigError("pair correction table columns must be ascending");
    for (double g : correction)
        if (!(g > 0.0 && g <= 1.05)) throw ConfigError("pair correction outside (0, 1.05]");
    for (double f : f1_value)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("single-photon fidelity outside (0, 1]");
}

double PairCorrectionTable::pair_correction(double d) const {
    d = std::abs(d);
    if (d < separation.front()) {
        std::ostringstream os;
        os << "separation " << d << " below the table range";
        throw ExtrapolationError(os.str());
    }
    return interpolate(separation, correction, d);
}

double PairCorrectionTable::single_fidelity(double omega) const {
    const double tol = 1e-9 * std::abs(omega);
    if (omega < f1_frequency.front() - tol || omega > f1_frequency.back() + tol) {
        std::ostringstream os;
        os << "frequency " << omega << " outside the sampled single-photon fidelity curve";
        throw ExtrapolationError(os.str());
    }
    return interpolate(f1_frequency, f1_value, omega);
}

double fidelity_estimate(const PairCorrectionTable& table, const std::vector<double>& w) {
    double f = 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        f *= table.single_fidelity(w[i]);
        for (std::size_t j = i + 1; j < w.size(); ++j) f *= table.pair_correction(w[j] - w[i]);
    }
    return f;
}

double overlap_fidelity_estimate(const std::vector<double>& f1, const std::vector<double>& w, double kappa) {
    if (f1.size() != w.size()) throw ConfigError("need one single-photon fidelity per frequency");
    double f = 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        f *= f1[i];
        for (std::size_t j = i + 1; j < w.size(); ++j) f *= 1.0 - mode_overlap(w[i], w[j], kappa);
    }
    return f;
}

NMax n_max(double tolerance, double f1, double spacing, double kappa) {
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("tolerance must lie in (0, 1)");
    const double p = f1 * (1.0 - mode_overlap(0.0, spacing, kappa));
    NMax r;
    if (p >= 1.0) {
        r.unbounded = true;
        return r;
    }
    r.count = static_cast<std::size_t>(std::floor(std::log1p(-tolerance) / std::log(p)));
    return r;
}

std::vector<double> equally_spaced(std::size_t n, double spacing, double center) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = center + (static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) * spacing;
    return w;
}

CapacityPlan bandwidth_requirement(std::size_t n, double tolerance, const std::function<double(double)>& f1,
                                   double kappa, const BandwidthOptions& opts) {
    if (n == 0) throw ConfigError("need at least one emitter");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    CapacityPlan plan;
    plan.n = n;
    plan.tolerance = tolerance;
    const double step = opts.snap_spacing > 0.0 ? opts.snap_spacing : opts.step_over_kappa * kappa;
    const double limit = opts.max_spacing_over_kappa * kappa;
    for (double d = step; d <= limit + 0.5 * step; d += step) {
        const auto w = equally_spaced(n, d, opts.center);
        std::vector<double> f(n);
        double single = 1.0;
        for (std::size_t i = 0; i < n; ++i) single *= (f[i] = f1(w[i]));
        if (1.0 - single > tolerance) {
            // more spacing cannot recover the single-photon budget
            if (std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); })) break;
            continue;
        }
        const double est = overlap_fidelity_estimate(f, w, kappa);
        if (est >= 1.0 - tolerance) {
            plan.spacing = d;
            plan.frequencies = w;
            plan.estimated_fidelity = est;
            plan.bandwidth = static_cast<double>(n) * d;
            plan.attainable = true;
            return plan;
        }
    }
    return plan;
}

}  // namespace wgqed
