#pragma once

// Sector-ordered Fock oracle and the two-excitation gate shared by the unit
// tests and the acceptance run.
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>

#include "fixtures.hpp"
#include "fock_oracle.hpp"
#include "wgqed/dynamics.hpp"

namespace oracle {

using namespace wgqed;

// Position of a Fock state inside the sector-restricted vectors.
inline std::size_t sector_index(const oracle::Occupation& o, std::size_t ne, std::size_t nm, Sector sector) {
    std::vector<std::size_t> sites;
    for (std::size_t k = 0; k < o.size(); ++k)
        for (int n = 0; n < o[k]; ++n) sites.push_back(k);
    if (sector == Sector::single) return sites[0];
    DoubleLayout L(ne, nm);
    const std::size_t a = sites[0], b = sites[1];  // a <= b
    auto kind = [&](std::size_t s) { return s < ne ? 0 : (s < 2 * ne ? 1 : 2); };
    auto local = [&](std::size_t s) { return s < ne ? s : (s < 2 * ne ? s - ne : s - 2 * ne); };
    const int ka = kind(a), kb = kind(b);
    const std::size_t la = local(a), lb = local(b);
    if (ka == 0 && kb == 0) return L.qq(la, lb);
    if (ka == 1 && kb == 1) return L.cc(la, lb);
    if (ka == 2 && kb == 2) return L.pp(la, lb);
    if (ka == 0 && kb == 1) return L.qc(la, lb);
    if (ka == 0 && kb == 2) return L.qpsi(la, lb);
    return L.cpsi(la, lb);
}

inline Eigen::MatrixXcd in_sector_order(const NetworkSpec& net, Sector sector) {
    const std::size_t ne = net.n_emitters(), nm = net.n_modes();
    auto fock = enumerate(ne, nm, sector == Sector::single ? 1 : 2);
    std::vector<cplx> g;
    for (auto& e : net.emitters) g.push_back(e.coupling(0.0));
    Eigen::MatrixXcd Hf = hamiltonian(fock, net, g);
    const auto n = static_cast<Eigen::Index>(fock.states.size());
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        perm[static_cast<std::size_t>(k)] =
            static_cast<Eigen::Index>(sector_index(fock.states[static_cast<std::size_t>(k)], ne, nm, sector));
    Eigen::MatrixXcd H(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) H(perm[i], perm[j]) = Hf(i, j);
    return H;
}

/// State-norm distance between RK4 and exp(-iHT) on the two-qubit, two-filter,
/// 8-mode network, started from a superposition touching every block.
inline double double_sector_gate_error() {
    const auto net = fixtures::small_network();
    const double T = 150e-9;
    auto s0 = DoubleExcState::qubit_pair(net, 0, 1);
    s0.amp[s0.layout.cc(0, 0)] = cplx{0.3, -0.2};
    s0.amp[s0.layout.pp(2, 5)] = cplx{0.0, 0.4};
    const double n0 = std::sqrt(s0.norm_squared());
    for (auto& x : s0.amp) x /= n0;

    EvolveOptions opts;
    opts.policy.dt_scale = 2.0;
    auto traj = evolve(net, Sector::double_, s0.amp, 0.0, T, opts);

    const Eigen::MatrixXcd H = in_sector_order(net, Sector::double_);
    const Eigen::MatrixXcd U = (cplx{0, -T} * H).exp();
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s0.amp.size()));
    for (std::size_t k = 0; k < s0.amp.size(); ++k) v(static_cast<Eigen::Index>(k)) = s0.amp[k];
    const Eigen::VectorXcd ref = U * v;
    double diff = 0.0;
    for (std::size_t k = 0; k < s0.amp.size(); ++k) diff += std::norm(traj.final_state[k] - ref(static_cast<Eigen::Index>(k)));
    return std::sqrt(diff);
}

}  // namespace oracle
