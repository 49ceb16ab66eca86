#include <cmath>
#include <stdexcept>

#include "wgqed/model.hpp"
#include "wgqed/wavepacket.hpp"

namespace wgqed {

namespace {

constexpr double kPi2Over6 = units::pi * units::pi / 6.0;

// Power series, converges fast for |x| <= 1/2.
double dilog_series(double x) {
    double term = x;
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double add = term / (static_cast<double>(k) * k);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= x;
    }
    return sum;
}

}  // namespace

double dilog(double x) {
    if (x > 1.0) throw std::domain_error("dilog: real branch requires x <= 1");
    if (x == 1.0) return kPi2Over6;
    if (x == 0.0) return 0.0;
    if (x < -1.0) {
        // inversion: Li2(x) = -pi^2/6 - ln^2(-x)/2 - Li2(1/x)
        const double l = std::log(-x);
        return -kPi2Over6 - 0.5 * l * l - dilog(1.0 / x);
    }
    if (x < -0.5) {
        // Landen: Li2(x) = -Li2(x/(x-1)) - ln^2(1-x)/2, with x/(x-1) in (1/3, 1/2]
        const double l = std::log1p(-x);
        return -dilog_series(x / (x - 1.0)) - 0.5 * l * l;
    }
    if (x <= 0.5) return dilog_series(x);
    // reflection: Li2(x) = pi^2/6 - ln(x) ln(1-x) - Li2(1-x)
    return kPi2Over6 - std::log(x) * std::log1p(-x) - dilog_series(1.0 - x);
}

double analytic_g0(double kappa, double t) { return 0.5 * kappa / std::cosh(0.5 * kappa * t); }

double analytic_g1(double kappa, double t) {
    const double kt = kappa * t;
    const double sech = 1.0 / std::cosh(0.5 * kt);
    // sech^2(kt/2)(1 + sinh kt) rewritten to stay finite for large |kt|
    const double mixed = sech * sech + 2.0 * std::tanh(0.5 * kt);
    const double inner = -8.0 * dilog(-std::exp(-kt)) +
                         kt * (2.0 * kt + 8.0 * std::log1p(std::exp(-kt)) - kt * mixed);
    const double ratio = (1.0 + std::exp(kt) + kt) / (1.0 + std::exp(kt));
    return kappa * ratio * sech / std::sqrt(inner);
}

}  // namespace wgqed
