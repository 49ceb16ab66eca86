#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wgqed/model.hpp"

namespace wgqed {

/// Fixed-step RK4 step selection: the step satisfies kappa*dt <= kappa_dt and
/// (max sector detuning)*dt <= detuning_dt, then is divided by dt_scale.
struct StepPolicy {
    double kappa_dt = 1e-3;
    double detuning_dt = 0.1;
    double dt_scale = 1.0;
};

struct EvolveOptions {
    StepPolicy policy;
    std::vector<double> snapshot_times;
    std::size_t n_samples = 400;  // observable samples across the span
    double max_norm_drift = 1e-6;
};

/// Single-excitation amplitudes: q_j (qubits), c_j (filters), psi_m (modes).
struct SingleExcState {
    std::vector<cplx> q, c, psi;

    static SingleExcState vacuum_like(const NetworkSpec& net);
    static SingleExcState qubit(const NetworkSpec& net, std::size_t j);
    double norm_squared() const;
    std::vector<cplx> flatten() const;
    static SingleExcState unflatten(const NetworkSpec& net, const std::vector<cplx>& flat);
};

/// Flat layout of the two-excitation sector. Bosonic pairs are stored
/// upper-triangular over normalized basis vectors, so a doubly occupied mode
/// (a^dag)^2|0>/sqrt(2) is a single unit-norm entry.
struct DoubleLayout {
    std::size_t ne = 0;  // emitters (qubits = filters = ne)
    std::size_t nm = 0;  // waveguide modes
    std::size_t off_qq = 0, off_cc = 0, off_qc = 0, off_qpsi = 0, off_cpsi = 0, off_pp = 0, dim = 0;

    DoubleLayout() = default;
    DoubleLayout(std::size_t emitters, std::size_t modes);

    // i < j
    std::size_t qq(std::size_t i, std::size_t j) const;
    // i <= j (order-insensitive)
    std::size_t cc(std::size_t i, std::size_t j) const;
    // qubit i, filter j
    std::size_t qc(std::size_t i, std::size_t j) const { return off_qc + i * ne + j; }
    std::size_t qpsi(std::size_t i, std::size_t m) const { return off_qpsi + i * nm + m; }
    std::size_t cpsi(std::size_t i, std::size_t m) const { return off_cpsi + i * nm + m; }
    // m <= n (order-insensitive)
    std::size_t pp(std::size_t m, std::size_t n) const;
};

struct DoubleExcState {
    DoubleLayout layout;
    std::vector<cplx> amp;

    static DoubleExcState zero(const NetworkSpec& net);
    /// Both qubits i != j excited, everything else empty.
    static DoubleExcState qubit_pair(const NetworkSpec& net, std::size_t i, std::size_t j);
    double norm_squared() const;
};

enum class Sector { single, double_ };

/// Time-dependent generator of one excitation sector. `apply` writes
/// out = -i H(t) in, with all energies taken relative to the network frame.
class SectorOperator {
public:
    SectorOperator(const NetworkSpec& net, Sector sector);

    std::size_t dim() const { return dim_; }
    Sector sector() const { return sector_; }
    double max_detuning() const { return max_detuning_; }
    void apply(double t, const cplx* in, cplx* out) const;

    /// Dense H(t) (row-major), built column by column. For small instances.
    std::vector<cplx> dense_hamiltonian(double t) const;

    /// Per-emitter marginal populations of a state in this sector.
    void populations(const cplx* state, std::vector<double>& qubit, std::vector<double>& filter) const;

private:
    void apply_single(double t, const cplx* in, cplx* out) const;
    void apply_double(double t, const cplx* in, cplx* out) const;

    const NetworkSpec* net_;
    Sector sector_;
    std::size_t ne_, nm_, dim_;
    DoubleLayout layout_;
    std::vector<double> qubit_det_, filter_det_, mode_det_;
    std::vector<double> mode_amp_;    // a_m with G_{m,j} = a_m b_j sign
    std::vector<double> mode_sign_;   // (-1)^m
    std::vector<double> filter_amp_;  // b_j
    std::vector<bool> right_side_;
    double max_detuning_ = 0.0;
    mutable std::vector<cplx> g_;
    mutable std::vector<cplx> lsum_, rsum_, s_acc_, t_acc_, v_acc_, w_acc_;
};

struct Snapshot {
    double time = 0.0;
    Sector sector = Sector::single;
    std::vector<cplx> amplitudes;  // full sector state, rotating frame
};

struct Trajectory {
    Sector sector = Sector::single;
    std::vector<double> times;
    std::vector<std::vector<double>> qubit_pop;   // [sample][emitter]
    std::vector<std::vector<double>> filter_pop;  // [sample][emitter]
    std::vector<double> norm;
    std::vector<Snapshot> snapshots;
    std::vector<cplx> final_state;
    double frame = 0.0;  // rotating-frame frequency
    double dt = 0.0;
    std::size_t steps = 0;
    double norm_drift = 0.0;

    double t0() const { return times.front(); }
    double t1() const { return times.back(); }
};

Trajectory evolve(const NetworkSpec& net, Sector sector, std::vector<cplx> state0, double t0, double t1,
                  const EvolveOptions& opts = {});
Trajectory evolve_single(const NetworkSpec& net, const SingleExcState& state0, const TimeGrid& span,
                         const EvolveOptions& opts = {});
Trajectory evolve_double(const NetworkSpec& net, const DoubleExcState& state0, const TimeGrid& span,
                         const EvolveOptions& opts = {});

/// Step size the policy picks for a sector over [t0, t1].
double choose_step(const NetworkSpec& net, const SectorOperator& op, const StepPolicy& policy);

/// Waveguide amplitudes psi_k of a single-excitation snapshot taken at t.
std::vector<cplx> snapshot_spectrum(const Trajectory& traj, double t, std::size_t n_modes);

/// CSV: t, q_pop_j..., c_pop_j...
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace wgqed
