#pragma once

#include <vector>

#include "wgqed/model.hpp"

namespace fixtures {

using wgqed::cplx;

/// Constant drive over a wide grid.
inline wgqed::ScheduledControl constant_drive(cplx g, double t0 = -1e-5, double t1 = 1e-5) {
    wgqed::Control c;
    c.grid = wgqed::TimeGrid(t0, t1, 4);
    c.samples.assign(c.grid.size(), g);
    return {c, 0.0};
}

/// Two emitters (left and right) on a short 8-mode window of a 30 m guide.
inline wgqed::NetworkSpec small_network(std::size_t n_modes = 8, bool driven = true) {
    using namespace wgqed;
    WaveguideSpec wg;
    wg.n_modes = n_modes;
    const double kappa = 20 * units::MHz;
    const double wc = wg.center_frequency;
    EmitterSpec a{wc + 2.0 * units::MHz, wc + 1.0 * units::MHz, kappa, NodeSide::left, std::nullopt};
    EmitterSpec b{wc - 3.0 * units::MHz, wc - 1.5 * units::MHz, 0.7 * kappa, NodeSide::right, std::nullopt};
    if (driven) {
        a.drive = constant_drive(cplx{0.4, 0.25} * kappa);
        b.drive = constant_drive(cplx{-0.3, 0.5} * kappa);
    }
    return make_network(wg, {a, b});
}

}  // namespace fixtures
