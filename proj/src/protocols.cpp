#include "wgqed/protocols.hpp"

#include <algorithm>
#include <cmath>

#include "wgqed/crosstalk.hpp"
#include "wgqed/errors.hpp"

namespace wgqed {

PhotonMode ShapeSpec::build(double kappa, double half_span_over_kappa, std::size_t steps) const {
    PhotonMode mode;
    if (samples) {
        mode = *samples;
    } else {
        const auto grid = TimeGrid::symmetric(kappa, half_span_over_kappa, steps);
        mode = order == 0 ? sech_mode(kappa, grid) : orthogonal_family(kappa, order, grid).back();
    }
    return chirp != 0.0 ? chirped_mode(mode, chirp) : mode;
}

Control emission_control(const ShapeSpec& shape, double kappa, double half_span_over_kappa, std::size_t steps) {
    return synthesize_control(shape.build(kappa, half_span_over_kappa, steps), kappa);
}

Control absorption_control(const ShapeSpec& shape, double kappa, double half_span_over_kappa, std::size_t steps) {
    return time_reverse(emission_control(shape, kappa, half_span_over_kappa, steps));
}

double snap_frequency(const ModeGrid& grid, double omega, Placement placement) {
    if (placement == Placement::as_given) return omega;
    const std::size_t i = grid.nearest(omega);
    if (placement == Placement::on_mode) return grid.frequency[i];
    // nearest mid-point: between i and whichever neighbour lies on omega's side
    std::size_t j = omega >= grid.frequency[i] ? i + 1 : i - 1;
    if (i == 0 && omega < grid.frequency[0]) j = 1;
    if (j >= grid.size()) j = i - 1;
    return 0.5 * (grid.frequency[i] + grid.frequency[j]);
}

namespace {

// Qubit frequency and control decay for each emitter from the analytic
// dressed-parameter model, including same-node cross-talk shifts.
void calibrate_effective(NetworkSpec& net, std::vector<double>& control_kappa) {
    const std::size_t ne = net.n_emitters();
    std::vector<double> freq(ne), kap(ne);
    for (std::size_t i = 0; i < ne; ++i) {
        const auto& e = net.emitters[i];
        const double dressed = e.filter_frequency + lamb_shift(net, i);
        freq[i] = dressed;
        kap[i] = e.kappa * dressed / e.filter_frequency;
    }
    for (std::size_t i = 0; i < ne; ++i) {
        for (std::size_t j = 0; j < ne; ++j) {
            if (i == j || net.emitters[i].side != net.emitters[j].side) continue;
            const auto p = effective_crosstalk_params(net, i, j);
            if (!p.valid) continue;
            freq[i] += p.magnus_shift[0].real();
            kap[i] -= 2.0 * p.magnus_shift[0].imag();
        }
    }
    for (std::size_t i = 0; i < ne; ++i) net.emitters[i].qubit_frequency = freq[i];
    control_kappa = kap;
}

}  // namespace

Link build_link(const WaveguideSpec& waveguide, const std::vector<Channel>& channels, const LinkOptions& opts) {
    if (channels.empty()) throw ConfigError("a link needs at least one channel");
    std::vector<NodeEmitter> emitters;
    for (const auto& ch : channels)
        emitters.push_back({ch.filter_frequency, ch.filter_frequency, ch.kappa, NodeSide::left, ch.emit});
    for (const auto& ch : channels)
        emitters.push_back({ch.filter_frequency, ch.filter_frequency, ch.kappa, NodeSide::right,
                            opts.absorb ? std::optional<ShapeSpec>(ch.absorb ? *ch.absorb : ch.emit) : std::nullopt});
    return build_link(waveguide, emitters, opts);
}

Link build_link(const WaveguideSpec& waveguide, const std::vector<NodeEmitter>& nodes, const LinkOptions& opts) {
    if (nodes.empty()) throw ConfigError("a link needs at least one emitter");
    waveguide.validate();
    const auto grid = build_mode_grid(waveguide);

    Link link;
    std::vector<EmitterSpec> emitters;
    double kappa_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const auto& nd = nodes[j];
        if (!(nd.kappa > 0.0)) throw ConfigError("emitter " + std::to_string(j) + ": kappa must be positive");
        const double w = snap_frequency(grid, nd.filter_frequency, opts.placement);
        // a snapped filter takes its qubit along
        const double q = nd.qubit_frequency + (w - nd.filter_frequency);
        emitters.push_back({q, w, nd.kappa, nd.side, std::nullopt});
        (nd.side == NodeSide::left ? link.senders : link.receivers).push_back(j);
        kappa_min = std::min(kappa_min, nd.kappa);
    }
    link.n_channels = std::min(link.senders.size(), link.receivers.size());
    link.net = make_network(waveguide, emitters);
    link.control_kappa.resize(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) link.control_kappa[j] = link.net.emitters[j].kappa;
    if (opts.calibration == Calibration::effective) calibrate_effective(link.net, link.control_kappa);

    double slowest = 0.0;
    for (const auto& e : link.net.emitters) {
        const double vg = waveguide.group_velocity(waveguide.wavenumber(e.filter_frequency));
        slowest = std::max(slowest, waveguide.length / vg);
    }
    link.flight_time = slowest;
    link.emit_center = -0.5 * slowest;
    link.absorb_center = 0.5 * slowest;
    const double margin = opts.half_span_over_kappa / kappa_min;
    link.t0 = link.emit_center - margin;
    link.t1 = link.absorb_center + margin;

    for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (!nodes[j].shape) continue;
        auto& e = link.net.emitters[j];
        const double k = link.control_kappa[j];
        if (e.side == NodeSide::left)
            e.drive = ScheduledControl{
                emission_control(*nodes[j].shape, k, opts.half_span_over_kappa, opts.control_steps), link.emit_center};
        else
            e.drive = ScheduledControl{
                absorption_control(*nodes[j].shape, k, opts.half_span_over_kappa, opts.control_steps),
                link.absorb_center};
    }
    return link;
}

}  // namespace wgqed
