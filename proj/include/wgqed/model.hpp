#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "wgqed/wavepacket.hpp"

namespace wgqed {

namespace units {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double speed_of_light = 2.99792458e8;  // m/s
inline constexpr double wr90_cross_section = 2.286e-2;  // m
inline constexpr double GHz = two_pi * 1e9;              // rad/s per GHz
inline constexpr double MHz = two_pi * 1e6;              // rad/s per MHz
}  // namespace units

/// Rectangular waveguide operated in its fundamental band. All frequencies
/// are angular (rad/s).
struct WaveguideSpec {
    double length = 30.0;                               // l_WG, m
    double cross_section = units::wr90_cross_section;   // l1, m
    double light_speed = units::speed_of_light;         // c, m/s
    std::size_t n_modes = 300;                          // N_WG
    double center_frequency = 8.9 * units::GHz;         // window center

    double cutoff() const { return light_speed * units::pi / cross_section; }
    /// omega(k) = c sqrt((pi/l1)^2 + k^2)
    double dispersion(double k) const;
    double group_velocity(double k) const;
    /// Inverse of the dispersion relation (omega above cutoff).
    double wavenumber(double omega) const;
    void validate() const;
};

struct ModeGrid {
    std::vector<long> index;            // m
    std::vector<double> wavenumber;     // k_m = m pi / l_WG
    std::vector<double> frequency;      // omega_m
    std::vector<double> group_velocity; // c^2 k_m / omega_m

    std::size_t size() const { return index.size(); }
    double lowest() const { return frequency.front(); }
    double highest() const { return frequency.back(); }
    /// Local mode spacing around `omega` (nearest interior pair).
    double free_spectral_range(double omega) const;
    /// Index (into the grid, not m) of the mode closest to `omega`.
    std::size_t nearest(double omega) const;
};

ModeGrid build_mode_grid(const WaveguideSpec& spec);

enum class NodeSide { left, right };

/// A control attached to an emitter, placed on the simulation time axis.
/// The control's own grid is shifted by `delay`; outside it g(t) = 0.
struct ScheduledControl {
    Control control;
    double delay = 0.0;

    std::complex<double> operator()(double t) const { return control.value(t - delay); }
};

struct EmitterSpec {
    double qubit_frequency = 0.0;   // delta_j
    double filter_frequency = 0.0;  // omega_Rj
    double kappa = 0.0;             // bare filter decay
    NodeSide side = NodeSide::left;
    std::optional<ScheduledControl> drive;

    std::complex<double> coupling(double t) const {
        return drive ? (*drive)(t) : std::complex<double>{};
    }
};

/// Row-major (mode x emitter) real matrix.
struct CouplingMatrix {
    std::size_t n_modes = 0;
    std::size_t n_emitters = 0;
    std::vector<double> data;

    double operator()(std::size_t m, std::size_t j) const { return data[m * n_emitters + j]; }
};

CouplingMatrix coupling_matrix(const ModeGrid& grid, const std::vector<EmitterSpec>& emitters,
                               double waveguide_length);

struct NetworkSpec {
    WaveguideSpec waveguide;
    ModeGrid grid;
    std::vector<EmitterSpec> emitters;
    CouplingMatrix couplings;

    /// Rotating-frame reference; every sector frequency is stored relative to it.
    double frame() const { return waveguide.center_frequency; }
    std::size_t n_emitters() const { return emitters.size(); }
    std::size_t n_modes() const { return grid.size(); }
};

NetworkSpec make_network(const WaveguideSpec& waveguide, std::vector<EmitterSpec> emitters);

}  // namespace wgqed
