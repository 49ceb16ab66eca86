#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "wgqed/model.hpp"

namespace wgqed {

/// Photon shape for a channel: a member of the orthogonal family (order 0 is
/// the sech), optionally chirped, or a user-provided sampled mode.
struct ShapeSpec {
    std::size_t order = 0;
    double chirp = 0.0;  // carrier offset, rad/s
    std::optional<PhotonMode> samples;

    /// Mode on a (-half_span/kappa, +half_span/kappa) grid.
    PhotonMode build(double kappa, double half_span_over_kappa, std::size_t steps) const;
};

/// One sender -> receiver photon channel; both filters share the frequency.
struct Channel {
    double filter_frequency = 0.0;  // bare omega_R
    double kappa = 0.0;
    ShapeSpec emit;
    std::optional<ShapeSpec> absorb;  // defaults to `emit`
};

enum class Calibration {
    bare,      // qubit at omega_R, control built for kappa
    effective  // qubit at the dressed + cross-talk shifted frequency, control for kappa_eff
};

enum class Placement {
    as_given,
    on_mode,       // filter frequency moved onto the nearest waveguide mode
    between_modes  // filter frequency moved to the nearest mid-point between modes
};

struct LinkOptions {
    Calibration calibration = Calibration::bare;
    Placement placement = Placement::as_given;
    double half_span_over_kappa = 35.0;  // control grid and margin around emission/absorption
    std::size_t control_steps = 4000;
    bool absorb = true;  // false leaves the receivers undriven
    /// Effective calibration moves qubits onto the dressed frequencies.
};

/// One emitter of an explicitly described link. Left-node emitters emit
/// their shape, right-node emitters absorb it (time-reversed control).
struct NodeEmitter {
    double qubit_frequency = 0.0;
    double filter_frequency = 0.0;
    double kappa = 0.0;
    NodeSide side = NodeSide::left;
    std::optional<ShapeSpec> shape;  // undriven when empty
};

/// Point-to-point link. Left-node emitters are senders, right-node emitters
/// receivers; channel i pairs the i-th sender with the i-th receiver.
struct Link {
    NetworkSpec net;
    std::size_t n_channels = 0;
    std::vector<std::size_t> senders, receivers;
    double t0 = 0.0, t1 = 0.0;
    double flight_time = 0.0;
    double emit_center = 0.0, absorb_center = 0.0;
    std::vector<double> control_kappa;  // per emitter

    std::size_t sender(std::size_t i) const { return senders.at(i); }
    std::size_t receiver(std::size_t i) const { return receivers.at(i); }
};

double snap_frequency(const ModeGrid& grid, double omega, Placement placement);

/// Senders first (one per channel), then receivers, both filters at the
/// channel frequency and qubits resonant with them.
Link build_link(const WaveguideSpec& waveguide, const std::vector<Channel>& channels, const LinkOptions& opts = {});
Link build_link(const WaveguideSpec& waveguide, const std::vector<NodeEmitter>& emitters, const LinkOptions& opts = {});

/// Emitter control for `shape` with filter decay `kappa`; absorber control is
/// its time reverse.
Control emission_control(const ShapeSpec& shape, double kappa, double half_span_over_kappa, std::size_t steps);
Control absorption_control(const ShapeSpec& shape, double kappa, double half_span_over_kappa, std::size_t steps);

}  // namespace wgqed
