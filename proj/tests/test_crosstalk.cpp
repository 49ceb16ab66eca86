#include <cmath>

#include "doctest.h"
#include "wgqed/crosstalk.hpp"
#include "wgqed/errors.hpp"

using namespace wgqed;

namespace {

const double kKappa = 20 * units::MHz;

NetworkSpec network(std::vector<double> filters, NodeSide side = NodeSide::left, std::size_t n_modes = 300) {
    WaveguideSpec wg;
    wg.n_modes = n_modes;
    std::vector<EmitterSpec> es;
    for (double f : filters) es.push_back({f, f, kKappa, side, std::nullopt});
    return make_network(wg, es);
}

// Continuum principal value of J(w')/2pi over the mode window, J = kappa w'/w_R.
double continuum_shift(const NetworkSpec& net, double w, double w_r) {
    const auto& g = net.grid;
    const double lo = g.frequency.front() - 0.5 * g.free_spectral_range(g.frequency.front());
    const double hi = g.frequency.back() + 0.5 * g.free_spectral_range(g.frequency.back());
    return kKappa / (2 * units::pi * w_r) * (w * (std::log(w - lo) - std::log(hi - w)) - (hi - lo));
}

}  // namespace

TEST_CASE("on-mode Lamb shift reduces to the excluded mode sum") {
    auto net = network({8.9 * units::GHz});
    const double on = net.grid.frequency[net.grid.nearest(8.9 * units::GHz)];
    net = network({on});
    const auto& e = net.emitters[0];
    double direct = 0.0;
    const std::size_t near = net.grid.nearest(on);
    for (std::size_t m = 0; m < net.grid.size(); ++m) {
        if (m == near) continue;
        const double a2 = net.grid.group_velocity[m] * net.grid.frequency[m] / (2 * net.waveguide.length);
        direct += a2 * (e.kappa / e.filter_frequency) / (on - net.grid.frequency[m]);
    }
    CHECK(lamb_shift(net, 0, 1) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("Lamb shift follows the continuum principal value") {
    for (double f : {8.6, 8.9, 8.93, 9.2}) {
        CAPTURE(f);
        const auto net = network({f * units::GHz});
        const double w = f * units::GHz;
        const double s = lamb_shift(net, 0, 1);
        CHECK(s == doctest::Approx(continuum_shift(net, w, w)).epsilon(0.02));
    }
    // no mode-structure ripple between neighbouring modes
    const auto base = network({8.9 * units::GHz});
    const double fsr = base.grid.free_spectral_range(8.9 * units::GHz);
    for (double x : {0.1, 0.25, 0.5, 0.75}) {
        const double w = 8.9 * units::GHz + x * fsr;
        const auto net = network({w});
        CHECK(lamb_shift(net, 0, 1) == doctest::Approx(continuum_shift(net, w, w)).epsilon(0.02));
    }
}

TEST_CASE("Lamb shift fixed point converges") {
    const auto net = network({8.9 * units::GHz});
    const double s3 = lamb_shift(net, 0, 3), s6 = lamb_shift(net, 0, 6);
    CHECK(std::abs(s3 - s6) < 1e-5 * std::abs(s6));
    const double w = 8.9 * units::GHz + s6;
    CHECK(s6 == doctest::Approx(mode_sum_pv(net, 0, 0, w)).epsilon(1e-9));
}

TEST_CASE("exchange corrections are antisymmetric") {
    const double w = 8.9 * units::GHz;
    double prev = 1e300;
    for (double d : {2.0, 4.0, 8.0, 16.0}) {
        const auto net = network({w - 0.5 * d * kKappa, w + 0.5 * d * kKappa});
        const auto p = effective_crosstalk_params(net, 0, 1);
        REQUIRE(p.valid);
        CHECK(p.magnus_shift[0] == -p.magnus_shift[1]);
        const double split = p.dressed_frequency[1] - p.dressed_frequency[0];
        CHECK(std::abs(p.magnus_shift[0] - p.exchange * p.exchange / split) == 0.0);
        CHECK(std::abs(p.magnus_shift[0]) < prev);
        prev = std::abs(p.magnus_shift[0]);
        // dissipative exchange is the geometric mean of half the decay rates
        CHECK(p.exchange.real() == doctest::Approx(0.5 * kKappa).epsilon(0.05));
        CHECK(p.shifted_frequency(0) == doctest::Approx(p.dressed_frequency[0] + p.magnus_shift[0].real()));
    }
    const auto far = network({8.6 * units::GHz, 9.2 * units::GHz});
    CHECK(std::abs(effective_crosstalk_params(far, 0, 1).magnus_shift[0]) < 1e-2 * kKappa);
}

TEST_CASE("degenerate and invalid cross-talk inputs") {
    const auto same = network({8.9 * units::GHz, 8.9 * units::GHz});
    CHECK_FALSE(effective_crosstalk_params(same, 0, 1).valid);
    CHECK_THROWS_AS(effective_crosstalk_params(same, 0, 0), ConfigError);
    WaveguideSpec wg;
    const auto split = make_network(wg, {EmitterSpec{8.9 * units::GHz, 8.9 * units::GHz, kKappa, NodeSide::left, std::nullopt},
                                         EmitterSpec{8.95 * units::GHz, 8.95 * units::GHz, kKappa, NodeSide::right, std::nullopt}});
    CHECK_THROWS_AS(effective_crosstalk_params(split, 0, 1), ConfigError);
}

TEST_CASE("mode sum is symmetric in the pair") {
    const auto net = network({8.85 * units::GHz, 8.97 * units::GHz});
    for (double w : {8.8, 8.9, 9.0})
        CHECK(mode_sum_pv(net, 0, 1, w * units::GHz) == doctest::Approx(mode_sum_pv(net, 1, 0, w * units::GHz)));
}

TEST_CASE("parabolic minimum and line fit") {
    std::vector<double> x{-2, -1, 0, 1, 2}, y;
    for (double v : x) y.push_back(3 * (v - 0.37) * (v - 0.37) + 1);
    CHECK(parabolic_minimum(x, y) == doctest::Approx(0.37));
    std::vector<double> edge{0, 1, 2, 3, 4};
    CHECK_THROWS_AS(parabolic_minimum(x, edge), BracketError);
    const auto fit = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(fit.slope == doctest::Approx(2));
    CHECK(fit.intercept == doctest::Approx(1));
    CHECK(fit.r_squared == doctest::Approx(1));
}
