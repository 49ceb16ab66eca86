#include "wgqed/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wgqed/errors.hpp"

namespace wgqed {

namespace {
constexpr std::size_t kMaxModes = 200000;
}

double WaveguideSpec::dispersion(double k) const {
    const double kc = units::pi / cross_section;
    return light_speed * std::sqrt(kc * kc + k * k);
}

double WaveguideSpec::group_velocity(double k) const {
    return light_speed * light_speed * k / dispersion(k);
}

double WaveguideSpec::wavenumber(double omega) const {
    const double kc = units::pi / cross_section;
    const double q = omega / light_speed;
    if (q <= kc) {
        std::ostringstream os;
        os << "frequency " << omega << " rad/s is below the waveguide cutoff " << cutoff();
        throw ConfigError(os.str());
    }
    return std::sqrt(q * q - kc * kc);
}

void WaveguideSpec::validate() const {
    if (!(length > 0.0)) throw ConfigError("waveguide.length_m must be positive");
    if (!(cross_section > 0.0)) throw ConfigError("waveguide.cross_section_m must be positive");
    if (!(light_speed > 0.0)) throw ConfigError("waveguide light speed must be positive");
    if (n_modes < 1) throw ConfigError("waveguide.n_modes must be at least 1");
    if (n_modes > kMaxModes) throw ConfigError("waveguide.n_modes exceeds the sanity ceiling");
    if (!(center_frequency > cutoff())) {
        std::ostringstream os;
        os << "waveguide.center_freq_GHz (" << center_frequency / units::GHz
           << " GHz) must exceed the cutoff " << cutoff() / units::GHz << " GHz";
        throw ConfigError(os.str());
    }
}

double ModeGrid::free_spectral_range(double omega) const {
    if (size() < 2) return 0.0;
    std::size_t i = nearest(omega);
    if (i + 1 >= size()) i = size() - 2;
    return frequency[i + 1] - frequency[i];
}

std::size_t ModeGrid::nearest(double omega) const {
    auto it = std::lower_bound(frequency.begin(), frequency.end(), omega);
    if (it == frequency.end()) return size() - 1;
    std::size_t i = static_cast<std::size_t>(it - frequency.begin());
    if (i > 0 && omega - frequency[i - 1] < frequency[i] - omega) --i;
    return i;
}

ModeGrid build_mode_grid(const WaveguideSpec& spec) {
    spec.validate();
    const double kc = spec.wavenumber(spec.center_frequency);
    const double m_center = kc * spec.length / units::pi;
    const auto n = static_cast<long>(spec.n_modes);
    long m_lo = std::lround(m_center - 0.5 * static_cast<double>(n - 1));
    if (m_lo < 1) {
        std::ostringstream os;
        os << "cannot fit " << n << " modes above cutoff around the center frequency";
        throw ConfigError(os.str());
    }
    ModeGrid grid;
    grid.index.reserve(spec.n_modes);
    for (long m = m_lo; m < m_lo + n; ++m) {
        const double k = static_cast<double>(m) * units::pi / spec.length;
        grid.index.push_back(m);
        grid.wavenumber.push_back(k);
        grid.frequency.push_back(spec.dispersion(k));
        grid.group_velocity.push_back(spec.group_velocity(k));
    }
    return grid;
}

CouplingMatrix coupling_matrix(const ModeGrid& grid, const std::vector<EmitterSpec>& emitters,
                               double waveguide_length) {
    CouplingMatrix g;
    g.n_modes = grid.size();
    g.n_emitters = emitters.size();
    g.data.resize(g.n_modes * g.n_emitters);
    for (std::size_t j = 0; j < emitters.size(); ++j) {
        const auto& e = emitters[j];
        if (e.filter_frequency < grid.lowest() || e.filter_frequency > grid.highest()) {
            std::ostringstream os;
            os << "emitter " << j << " filter frequency " << e.filter_frequency / units::GHz
               << " GHz lies outside the mode window [" << grid.lowest() / units::GHz << ", "
               << grid.highest() / units::GHz << "] GHz";
            throw ConfigError(os.str());
        }
        if (!(e.kappa > 0.0)) throw ConfigError("emitter kappa must be positive");
        const bool far_end = e.side == NodeSide::right;
        for (std::size_t m = 0; m < grid.size(); ++m) {
            const double mag = std::sqrt(e.kappa * grid.group_velocity[m] * grid.frequency[m] /
                                         (2.0 * e.filter_frequency * waveguide_length));
            // cos(k_m x) evaluated at x = l_WG
            const bool flip = far_end && (grid.index[m] % 2 != 0);
            g.data[m * g.n_emitters + j] = flip ? -mag : mag;
        }
    }
    return g;
}

NetworkSpec make_network(const WaveguideSpec& waveguide, std::vector<EmitterSpec> emitters) {
    NetworkSpec net;
    net.waveguide = waveguide;
    net.grid = build_mode_grid(waveguide);
    for (std::size_t j = 0; j < emitters.size(); ++j) {
        const auto& e = emitters[j];
        for (double w : {e.qubit_frequency, e.filter_frequency}) {
            if (!(w > waveguide.cutoff()))
                throw ConfigError("emitter " + std::to_string(j) +
                                  " frequency lies below the waveguide cutoff");
        }
    }
    net.couplings = coupling_matrix(net.grid, emitters, waveguide.length);
    net.emitters = std::move(emitters);
    return net;
}

}  // namespace wgqed
