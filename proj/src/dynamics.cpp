#include "wgqed/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wgqed/errors.hpp"

namespace wgqed {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
const cplx kMinusI{0.0, -1.0};
}  // namespace

// ---------------------------------------------------------------- states

SingleExcState SingleExcState::vacuum_like(const NetworkSpec& net) {
    SingleExcState s;
    s.q.assign(net.n_emitters(), cplx{});
    s.c.assign(net.n_emitters(), cplx{});
    s.psi.assign(net.n_modes(), cplx{});
    return s;
}

SingleExcState SingleExcState::qubit(const NetworkSpec& net, std::size_t j) {
    if (j >= net.n_emitters()) throw ConfigError("qubit index out of range");
    auto s = vacuum_like(net);
    s.q[j] = 1.0;
    return s;
}

double SingleExcState::norm_squared() const {
    double n = 0.0;
    for (const auto* v : {&q, &c, &psi})
        for (auto x : *v) n += std::norm(x);
    return n;
}

std::vector<cplx> SingleExcState::flatten() const {
    std::vector<cplx> out;
    out.reserve(q.size() + c.size() + psi.size());
    out.insert(out.end(), q.begin(), q.end());
    out.insert(out.end(), c.begin(), c.end());
    out.insert(out.end(), psi.begin(), psi.end());
    return out;
}

SingleExcState SingleExcState::unflatten(const NetworkSpec& net, const std::vector<cplx>& flat) {
    const std::size_t ne = net.n_emitters();
    if (flat.size() != 2 * ne + net.n_modes()) throw ConfigError("single-excitation state has wrong size");
    SingleExcState s;
    s.q.assign(flat.begin(), flat.begin() + static_cast<long>(ne));
    s.c.assign(flat.begin() + static_cast<long>(ne), flat.begin() + static_cast<long>(2 * ne));
    s.psi.assign(flat.begin() + static_cast<long>(2 * ne), flat.end());
    return s;
}

DoubleLayout::DoubleLayout(std::size_t emitters, std::size_t modes) : ne(emitters), nm(modes) {
    off_qq = 0;
    off_cc = off_qq + ne * (ne - (ne > 0 ? 1 : 0)) / 2;
    off_qc = off_cc + ne * (ne + 1) / 2;
    off_qpsi = off_qc + ne * ne;
    off_cpsi = off_qpsi + ne * nm;
    off_pp = off_cpsi + ne * nm;
    dim = off_pp + nm * (nm + 1) / 2;
}

std::size_t DoubleLayout::qq(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    // rows i = 0..ne-2, each holding j = i+1..ne-1
    return off_qq + i * (2 * ne - i - 1) / 2 + (j - i - 1);
}

std::size_t DoubleLayout::cc(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return off_cc + i * (2 * ne - i + 1) / 2 + (j - i);
}

std::size_t DoubleLayout::pp(std::size_t m, std::size_t n) const {
    if (m > n) std::swap(m, n);
    return off_pp + m * (2 * nm - m + 1) / 2 + (n - m);
}

DoubleExcState DoubleExcState::zero(const NetworkSpec& net) {
    DoubleExcState s;
    s.layout = DoubleLayout(net.n_emitters(), net.n_modes());
    s.amp.assign(s.layout.dim, cplx{});
    return s;
}

DoubleExcState DoubleExcState::qubit_pair(const NetworkSpec& net, std::size_t i, std::size_t j) {
    if (i == j) throw ConfigError("a qubit cannot hold two excitations");
    if (i >= net.n_emitters() || j >= net.n_emitters()) throw ConfigError("qubit index out of range");
    auto s = zero(net);
    s.amp[s.layout.qq(i, j)] = 1.0;
    return s;
}

double DoubleExcState::norm_squared() const {
    double n = 0.0;
    for (auto x : amp) n += std::norm(x);
    return n;
}

// ---------------------------------------------------------------- operator

SectorOperator::SectorOperator(const NetworkSpec& net, Sector sector)
    : net_(&net), sector_(sector), ne_(net.n_emitters()), nm_(net.n_modes()) {
    const double frame = net.frame();
    for (const auto& e : net.emitters) {
        qubit_det_.push_back(e.qubit_frequency - frame);
        filter_det_.push_back(e.filter_frequency - frame);
        filter_amp_.push_back(std::sqrt(e.kappa / e.filter_frequency));
        right_side_.push_back(e.side == NodeSide::right);
    }
    const double l = net.waveguide.length;
    double single_max = 0.0;
    for (std::size_t m = 0; m < nm_; ++m) {
        mode_det_.push_back(net.grid.frequency[m] - frame);
        mode_amp_.push_back(std::sqrt(net.grid.group_velocity[m] * net.grid.frequency[m] / (2.0 * l)));
        mode_sign_.push_back(net.grid.index[m] % 2 == 0 ? 1.0 : -1.0);
        single_max = std::max(single_max, std::abs(mode_det_.back()));
    }
    for (std::size_t j = 0; j < ne_; ++j)
        single_max = std::max({single_max, std::abs(qubit_det_[j]), std::abs(filter_det_[j])});

    // The pair kernel relies on G_{m,j} = a_m b_j (+-1); check it against the matrix.
    for (std::size_t m = 0; m < nm_; ++m) {
        for (std::size_t j = 0; j < ne_; ++j) {
            const double sign = right_side_[j] ? mode_sign_[m] : 1.0;
            const double model = mode_amp_[m] * filter_amp_[j] * sign;
            if (std::abs(model - net.couplings(m, j)) > 1e-12 * std::abs(model))
                throw ConfigError("coupling matrix does not follow the Ohmic node-placement form");
        }
    }

    if (sector == Sector::single) {
        dim_ = 2 * ne_ + nm_;
        max_detuning_ = single_max;
    } else {
        layout_ = DoubleLayout(ne_, nm_);
        dim_ = layout_.dim;
        // Step control uses the largest single-particle detuning; pair energies
        // reach twice that, still well inside the RK4 stability region.
        max_detuning_ = single_max;
        lsum_.resize(nm_);
        rsum_.resize(nm_);
        s_acc_.resize(nm_);
        t_acc_.resize(nm_);
        v_acc_.resize(nm_);
        w_acc_.resize(nm_);
    }
    g_.resize(ne_);
}

void SectorOperator::apply(double t, const cplx* in, cplx* out) const {
    for (std::size_t j = 0; j < ne_; ++j) g_[j] = net_->emitters[j].coupling(t);
    if (sector_ == Sector::single)
        apply_single(t, in, out);
    else
        apply_double(t, in, out);
}

void SectorOperator::apply_single(double, const cplx* in, cplx* out) const {
    const cplx* q = in;
    const cplx* c = in + ne_;
    const cplx* psi = in + 2 * ne_;
    cplx* dq = out;
    cplx* dc = out + ne_;
    cplx* dpsi = out + 2 * ne_;
    const auto& G = net_->couplings;
    for (std::size_t j = 0; j < ne_; ++j) {
        dq[j] = kMinusI * (qubit_det_[j] * q[j] + g_[j] * c[j]);
        dc[j] = filter_det_[j] * c[j] + std::conj(g_[j]) * q[j];
    }
    for (std::size_t m = 0; m < nm_; ++m) {
        cplx acc = mode_det_[m] * psi[m];
        for (std::size_t j = 0; j < ne_; ++j) {
            const double gm = G.data[m * ne_ + j];
            acc += gm * c[j];
            dc[j] += gm * psi[m];
        }
        dpsi[m] = kMinusI * acc;
    }
    for (std::size_t j = 0; j < ne_; ++j) dc[j] *= kMinusI;
}

void SectorOperator::apply_double(double, const cplx* in, cplx* out) const {
    const auto& L = layout_;
    const auto& G = net_->couplings;
    const std::size_t ne = ne_, nm = nm_;
    // Everything is first accumulated as H*in, then multiplied by -i.

    // qubit pairs
    for (std::size_t i = 0; i < ne; ++i) {
        for (std::size_t j = i + 1; j < ne; ++j) {
            const std::size_t k = L.qq(i, j);
            out[k] = (qubit_det_[i] + qubit_det_[j]) * in[k] + g_[i] * in[L.qc(j, i)] + g_[j] * in[L.qc(i, j)];
        }
    }
    // filter pairs
    for (std::size_t i = 0; i < ne; ++i) {
        for (std::size_t j = i; j < ne; ++j) {
            const std::size_t k = L.cc(i, j);
            cplx acc = (filter_det_[i] + filter_det_[j]) * in[k];
            if (i == j) {
                acc += kSqrt2 * std::conj(g_[i]) * in[L.qc(i, i)];
                cplx s{};
                for (std::size_t m = 0; m < nm; ++m) s += G.data[m * ne + i] * in[L.cpsi(i, m)];
                acc += kSqrt2 * s;
            } else {
                acc += std::conj(g_[i]) * in[L.qc(i, j)] + std::conj(g_[j]) * in[L.qc(j, i)];
                cplx s{};
                for (std::size_t m = 0; m < nm; ++m)
                    s += G.data[m * ne + i] * in[L.cpsi(j, m)] + G.data[m * ne + j] * in[L.cpsi(i, m)];
                acc += s;
            }
            out[k] = acc;
        }
    }
    // qubit + filter
    for (std::size_t i = 0; i < ne; ++i) {
        for (std::size_t j = 0; j < ne; ++j) {
            const std::size_t k = L.qc(i, j);
            cplx acc = (qubit_det_[i] + filter_det_[j]) * in[k];
            const double w = (i == j) ? kSqrt2 : 1.0;
            acc += w * g_[i] * in[L.cc(i, j)];
            if (i != j) acc += std::conj(g_[j]) * in[L.qq(i, j)];
            cplx s{};
            for (std::size_t m = 0; m < nm; ++m) s += G.data[m * ne + j] * in[L.qpsi(i, m)];
            out[k] = acc + s;
        }
    }
    // qubit + mode
    for (std::size_t i = 0; i < ne; ++i) {
        for (std::size_t m = 0; m < nm; ++m) {
            cplx acc = (qubit_det_[i] + mode_det_[m]) * in[L.qpsi(i, m)] + g_[i] * in[L.cpsi(i, m)];
            for (std::size_t j = 0; j < ne; ++j) acc += G.data[m * ne + j] * in[L.qc(i, j)];
            out[L.qpsi(i, m)] = acc;
        }
    }
    // filter + mode, except the mode-pair feed handled below
    for (std::size_t i = 0; i < ne; ++i) {
        for (std::size_t m = 0; m < nm; ++m) {
            cplx acc = (filter_det_[i] + mode_det_[m]) * in[L.cpsi(i, m)] + std::conj(g_[i]) * in[L.qpsi(i, m)];
            for (std::size_t j = 0; j < ne; ++j) {
                const double w = (i == j) ? kSqrt2 : 1.0;
                acc += w * G.data[m * ne + j] * in[L.cc(i, j)];
            }
            out[L.cpsi(i, m)] = acc;
        }
    }

    // Mode pairs. With G_{m,j} = a_m b_j s_j(m):
    //   sum_j G_{m,j} cpsi(j,n) = a_m (lsum_n + sign_m rsum_n)
    for (std::size_t n = 0; n < nm; ++n) {
        cplx l{}, r{};
        for (std::size_t j = 0; j < ne; ++j) {
            const cplx v = filter_amp_[j] * in[L.cpsi(j, n)];
            if (right_side_[j])
                r += v;
            else
                l += v;
        }
        lsum_[n] = l;
        rsum_[n] = r;
        s_acc_[n] = 0.0;
        t_acc_[n] = 0.0;
        v_acc_[n] = 0.0;
        w_acc_[n] = 0.0;
    }
    const double* a = mode_amp_.data();
    const double* sg = mode_sign_.data();
    const double* det = mode_det_.data();
    const double* lre = reinterpret_cast<const double*>(lsum_.data());
    const double* rre = reinterpret_cast<const double*>(rsum_.data());
    double* vre = reinterpret_cast<double*>(v_acc_.data());
    double* wre = reinterpret_cast<double*>(w_acc_.data());
    for (std::size_t m = 0; m < nm; ++m) {
        const std::size_t row = L.pp(m, m);
        const double* p = reinterpret_cast<const double*>(in + row);
        double* o = reinterpret_cast<double*>(out + row);
        const double am = a[m], sm = sg[m], dm = det[m];
        const double lm_re = lre[2 * m], lm_im = lre[2 * m + 1];
        const double rm_re = rre[2 * m], rm_im = rre[2 * m + 1];
        // diagonal (n = m), normalized doubly occupied mode
        {
            const double pre = p[0], pim = p[1];
            o[0] = 2.0 * dm * pre + kSqrt2 * am * (lm_re + sm * rm_re);
            o[1] = 2.0 * dm * pim + kSqrt2 * am * (lm_im + sm * rm_im);
        }
        double s_re = kSqrt2 * am * p[0], s_im = kSqrt2 * am * p[1];
        double t_re = sm * s_re, t_im = sm * s_im;
        const std::size_t len = nm - m - 1;
        const double* pn = p + 2;
        double* on = o + 2;
        const double* an = a + m + 1;
        const double* sn = sg + m + 1;
        const double* dn = det + m + 1;
        const double* ln = lre + 2 * (m + 1);
        const double* rn = rre + 2 * (m + 1);
        double* vn = vre + 2 * (m + 1);
        double* wn = wre + 2 * (m + 1);
        const double amsm = am * sm;
#pragma GCC ivdep
        for (std::size_t k = 0; k < len; ++k) {
            const double pr = pn[2 * k], pi = pn[2 * k + 1];
            const double e = dm + dn[k];
            const double ak = an[k], ask = an[k] * sn[k];
            on[2 * k] = e * pr + am * ln[2 * k] + amsm * rn[2 * k] + ak * lm_re + ask * rm_re;
            on[2 * k + 1] = e * pi + am * ln[2 * k + 1] + amsm * rn[2 * k + 1] + ak * lm_im + ask * rm_im;
            s_re += ak * pr;
            s_im += ak * pi;
            t_re += ask * pr;
            t_im += ask * pi;
            vn[2 * k] += am * pr;
            vn[2 * k + 1] += am * pi;
            wn[2 * k] += amsm * pr;
            wn[2 * k + 1] += amsm * pi;
        }
        s_acc_[m] += cplx{s_re, s_im};
        t_acc_[m] += cplx{t_re, t_im};
    }
    for (std::size_t m = 0; m < nm; ++m) {
        const cplx s = s_acc_[m] + v_acc_[m];
        const cplx t = t_acc_[m] + w_acc_[m];
        for (std::size_t i = 0; i < ne; ++i)
            out[L.cpsi(i, m)] += filter_amp_[i] * (right_side_[i] ? t : s);
    }

    for (std::size_t k = 0; k < dim_; ++k) out[k] *= kMinusI;
}

std::vector<cplx> SectorOperator::dense_hamiltonian(double t) const {
    std::vector<cplx> H(dim_ * dim_);
    std::vector<cplx> e(dim_, cplx{}), col(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        e[j] = 1.0;
        apply(t, e.data(), col.data());
        e[j] = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) H[i * dim_ + j] = cplx{0, 1} * col[i];
    }
    return H;
}

void SectorOperator::populations(const cplx* s, std::vector<double>& qubit, std::vector<double>& filter) const {
    qubit.assign(ne_, 0.0);
    filter.assign(ne_, 0.0);
    if (sector_ == Sector::single) {
        for (std::size_t j = 0; j < ne_; ++j) {
            qubit[j] = std::norm(s[j]);
            filter[j] = std::norm(s[ne_ + j]);
        }
        return;
    }
    const auto& L = layout_;
    for (std::size_t i = 0; i < ne_; ++i) {
        for (std::size_t j = i + 1; j < ne_; ++j) {
            const double p = std::norm(s[L.qq(i, j)]);
            qubit[i] += p;
            qubit[j] += p;
        }
        for (std::size_t j = 0; j < ne_; ++j) {
            const double p = std::norm(s[L.qc(i, j)]);
            qubit[i] += p;
            filter[j] += p;
        }
        for (std::size_t j = i; j < ne_; ++j) {
            const double p = std::norm(s[L.cc(i, j)]);
            // <a_i^dag a_i> on (a_i^dag)^2|0>/sqrt2 is 2
            if (i == j)
                filter[i] += 2.0 * p;
            else {
                filter[i] += p;
                filter[j] += p;
            }
        }
        for (std::size_t m = 0; m < nm_; ++m) {
            qubit[i] += std::norm(s[L.qpsi(i, m)]);
            filter[i] += std::norm(s[L.cpsi(i, m)]);
        }
    }
}

// ---------------------------------------------------------------- evolution

double choose_step(const NetworkSpec& net, const SectorOperator& op, const StepPolicy& policy) {
    double kmax = 0.0;
    for (const auto& e : net.emitters) kmax = std::max(kmax, e.kappa);
    double dt = std::numeric_limits<double>::infinity();
    if (kmax > 0.0) dt = std::min(dt, policy.kappa_dt / kmax);
    if (op.max_detuning() > 0.0) dt = std::min(dt, policy.detuning_dt / op.max_detuning());
    if (!std::isfinite(dt)) throw ConfigError("cannot choose a time step: no rates in the network");
    return dt / policy.dt_scale;
}

namespace {

double sum_norm(const std::vector<cplx>& v) {
    double n = 0.0;
    for (auto x : v) n += std::norm(x);
    return n;
}

}  // namespace

Trajectory evolve(const NetworkSpec& net, Sector sector, std::vector<cplx> y, double t0, double t1,
                  const EvolveOptions& opts) {
    if (!(t0 < t1)) throw ConfigError("evolution span requires t0 < t1");
    SectorOperator op(net, sector);
    if (y.size() != op.dim()) throw ConfigError("initial state does not match the sector dimension");
    const double h_target = choose_step(net, op, opts.policy);

    std::vector<double> breaks;
    for (double ts : opts.snapshot_times) {
        if (ts < t0 || ts > t1) throw ConfigError("snapshot time outside the integration window");
        breaks.push_back(ts);
    }
    breaks.push_back(t1);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const std::size_t total_steps = static_cast<std::size_t>(std::ceil((t1 - t0) / h_target));
    const std::size_t stride = std::max<std::size_t>(1, total_steps / std::max<std::size_t>(opts.n_samples, 1));

    Trajectory traj;
    traj.sector = sector;
    traj.frame = net.frame();
    traj.dt = h_target;
    const double norm0 = sum_norm(y);

    std::vector<double> qp, fp;
    auto record = [&](double t) {
        op.populations(y.data(), qp, fp);
        traj.times.push_back(t);
        traj.qubit_pop.push_back(qp);
        traj.filter_pop.push_back(fp);
        traj.norm.push_back(sum_norm(y));
    };
    auto snapshot_if_requested = [&](double t) {
        for (double ts : opts.snapshot_times)
            if (ts == t) {
                traj.snapshots.push_back({t, sector, y});
                break;
            }
    };
    record(t0);
    snapshot_if_requested(t0);

    const std::size_t n = y.size();
    std::vector<cplx> k(n), acc(n), tmp(n);
    double t = t0;
    std::size_t step_count = 0;
    for (double stop : breaks) {
        if (stop <= t) continue;
        const auto nseg = static_cast<std::size_t>(std::ceil((stop - t) / h_target - 1e-9));
        const double h = (stop - t) / static_cast<double>(nseg);
        const double start = t;
        for (std::size_t s = 0; s < nseg; ++s) {
            const double ts = start + h * static_cast<double>(s);
            op.apply(ts, y.data(), k.data());
            for (std::size_t i = 0; i < n; ++i) {
                acc[i] = y[i] + (h / 6.0) * k[i];
                tmp[i] = y[i] + (0.5 * h) * k[i];
            }
            op.apply(ts + 0.5 * h, tmp.data(), k.data());
            for (std::size_t i = 0; i < n; ++i) {
                acc[i] += (h / 3.0) * k[i];
                tmp[i] = y[i] + (0.5 * h) * k[i];
            }
            op.apply(ts + 0.5 * h, tmp.data(), k.data());
            for (std::size_t i = 0; i < n; ++i) {
                acc[i] += (h / 3.0) * k[i];
                tmp[i] = y[i] + h * k[i];
            }
            op.apply(ts + h, tmp.data(), k.data());
            for (std::size_t i = 0; i < n; ++i) y[i] = acc[i] + (h / 6.0) * k[i];
            ++step_count;
            if (step_count % stride == 0 && s + 1 < nseg) record(ts + h);
        }
        t = stop;
        record(t);
        snapshot_if_requested(t);
    }
    traj.steps = step_count;
    traj.norm_drift = std::abs(sum_norm(y) - norm0);
    traj.final_state = std::move(y);
    if (traj.norm_drift > opts.max_norm_drift) {
        std::ostringstream os;
        os << "norm drifted by " << traj.norm_drift << " (step " << h_target
           << " s); reduce the time step (increase dt_scale)";
        throw IntegrationError(os.str());
    }
    return traj;
}

Trajectory evolve_single(const NetworkSpec& net, const SingleExcState& state0, const TimeGrid& span,
                         const EvolveOptions& opts) {
    return evolve(net, Sector::single, state0.flatten(), span.t0, span.t1, opts);
}

Trajectory evolve_double(const NetworkSpec& net, const DoubleExcState& state0, const TimeGrid& span,
                         const EvolveOptions& opts) {
    return evolve(net, Sector::double_, state0.amp, span.t0, span.t1, opts);
}

std::vector<cplx> snapshot_spectrum(const Trajectory& traj, double t, std::size_t n_modes) {
    const double tol = 1e-9 * std::max(1e-30, std::abs(traj.t1() - traj.t0()));
    for (const auto& s : traj.snapshots) {
        if (std::abs(s.time - t) <= tol) {
            if (s.sector != Sector::single)
                throw MissingSnapshot("spectrum snapshots are defined for the single-excitation sector");
            if (s.amplitudes.size() < n_modes) throw MissingSnapshot("snapshot is smaller than the mode grid");
            return {s.amplitudes.end() - static_cast<long>(n_modes), s.amplitudes.end()};
        }
    }
    std::ostringstream os;
    os << "no snapshot stored at t = " << t;
    throw MissingSnapshot(os.str());
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    const std::size_t ne = traj.qubit_pop.empty() ? 0 : traj.qubit_pop.front().size();
    out << "t";
    for (std::size_t j = 0; j < ne; ++j) out << ",q" << j + 1;
    for (std::size_t j = 0; j < ne; ++j) out << ",c" << j + 1;
    out << "\n";
    char buf[64];
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.times[s]);
        out << buf;
        for (double v : traj.qubit_pop[s]) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out << buf;
        }
        for (double v : traj.filter_pop[s]) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace wgqed
