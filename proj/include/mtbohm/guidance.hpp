#ifndef MTBOHM_GUIDANCE_HPP
#define MTBOHM_GUIDANCE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mtbohm/two_time_state.hpp"

namespace mtbohm {

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = 0.25;
    /// Node threshold relative to the instantaneous peak branch density.
    double node_floor_rel = 1e-12;
    /// When > 0, steps never straddle multiples of this value. Keeps the
    /// accepted-step sequence of a run invariant under extra break points
    /// that are themselves grid multiples (detector insertions).
    double grid_cap = 0.0;
};

struct VelocitySample {
    double v_a = 0.0;
    double v_b = 0.0;
    double density = 0.0;
    bool ok = false;
};

/// Guiding velocities v_k = Im(psi^dag d_k psi) / (psi^dag psi) with the
/// spin indices contracted. Fails (ok = false) below the node floor.
inline VelocitySample velocity(const TwoTimeState& state, double q_a, double q_b,
                               double node_floor_rel = 1e-12) {
    std::array<cdouble, 4> psi{}, da{}, db{};
    double peak = 0.0;
    for (const auto& br : state.branches()) {
        const cdouble ga = br.packet_a.value(q_a);
        const cdouble gb = br.packet_b.value(q_b);
        const cdouble la = cdouble(0.0, br.packet_a.momentum) - br.packet_a.alpha * (q_a - br.packet_a.center);
        const cdouble lb = cdouble(0.0, br.packet_b.momentum) - br.packet_b.alpha * (q_b - br.packet_b.center);
        const cdouble w = br.coeff * ga * gb;
        const std::array<cdouble, 4> spin{br.spin_a.up * br.spin_b.up, br.spin_a.up * br.spin_b.dn,
                                          br.spin_a.dn * br.spin_b.up, br.spin_a.dn * br.spin_b.dn};
        for (int i = 0; i < 4; ++i) {
            psi[i] += w * spin[i];
            da[i] += w * la * spin[i];
            db[i] += w * lb * spin[i];
        }
        peak = std::max(peak, std::norm(br.coeff) * br.packet_a.norm_const() * br.packet_a.norm_const() *
                                  br.packet_b.norm_const() * br.packet_b.norm_const());
    }
    VelocitySample out;
    cdouble ja{0.0, 0.0}, jb{0.0, 0.0};
    for (int i = 0; i < 4; ++i) {
        out.density += std::norm(psi[i]);
        ja += std::conj(psi[i]) * da[i];
        jb += std::conj(psi[i]) * db[i];
    }
    if (out.density < node_floor_rel * peak || out.density <= 0.0) return out;
    out.v_a = ja.imag() / out.density;
    out.v_b = jb.imag() / out.density;
    out.ok = true;
    return out;
}

/// Piecewise-analytic view of a two-time state along a synchronization:
/// T_a(s) = t_a0 + s, T_b(s) = t_b0 + s. Between window-boundary crossings
/// the branch structure is fixed and packets propagate in closed form, so
/// velocity evaluations at arbitrary s cost O(branches).
class TwoTimeFlow {
public:
    /// base must be positioned at the s = 0 times. The flow covers
    /// s in [s_lo, s_hi].
    TwoTimeFlow(const TwoTimeState& base, double s_lo, double s_hi)
        : t_a0_(base.t_a()), t_b0_(base.t_b()), s_lo_(s_lo), s_hi_(s_hi) {
        if (!(s_lo <= 0.0 && 0.0 <= s_hi))
            throw std::invalid_argument("TwoTimeFlow: s range must contain 0");
        std::vector<double> cuts{s_lo};
        auto add_cuts = [&](const PotentialSchedule& sched, double t0) {
            for (const auto& w : sched.windows) {
                for (double edge : {w.t_start, w.t_end}) {
                    const double s = edge - t0;
                    if (s > s_lo && s < s_hi) cuts.push_back(s);
                }
            }
        };
        add_cuts(base.schedule(Subsystem::a), t_a0_);
        add_cuts(base.schedule(Subsystem::b), t_b0_);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end(),
                               [](double x, double y) { return std::abs(x - y) < 1e-13; }),
                   cuts.end());

        TwoTimeState cursor = s_lo < 0.0 ? multitime_shift(base, s_lo, s_lo) : base;
        double s_cursor = s_lo;
        for (std::size_t i = 0; i < cuts.size(); ++i) {
            const double s0 = cuts[i];
            const double s1 = i + 1 < cuts.size() ? cuts[i + 1] : s_hi;
            if (s0 > s_cursor) {
                cursor = multitime_shift(cursor, s0 - s_cursor, s0 - s_cursor);
                s_cursor = s0;
            }
            epochs_.push_back(make_epoch(cursor, s0, s1));
        }
    }

    double t_a0() const { return t_a0_; }
    double t_b0() const { return t_b0_; }
    double h() const { return t_b0_ - t_a0_; }
    double s_lo() const { return s_lo_; }
    double s_hi() const { return s_hi_; }

    /// Epoch boundaries (s values) where the velocity field loses smoothness.
    std::vector<double> boundaries() const {
        std::vector<double> out;
        for (const auto& e : epochs_) out.push_back(e.s0);
        return out;
    }

    /// Full state at parameter s (synchronized times t_a0+s, t_b0+s).
    TwoTimeState state_at(double s) const {
        const Epoch& e = epoch_at(s);
        TwoTimeState out = e.state;
        out = multitime_shift(out, s - e.s0, s - e.s0);
        return out;
    }

    VelocitySample eval(double s, double q_a, double q_b, double node_floor_rel = 1e-12) const {
        const Epoch& e = epoch_at(s);
        const double ds = s - e.s0;
        std::array<cdouble, 4> psi{}, da{}, db{};
        double peak = 0.0;
        for (const auto& bc : e.branches) {
            double na, nb;
            cdouble ga, la, gb, lb;
            eval_packet(bc.pa, bc.fa, ds, q_a, ga, la, na);
            eval_packet(bc.pb, bc.fb, ds, q_b, gb, lb, nb);
            const cdouble w = bc.coeff * ga * gb;
            for (int i = 0; i < 4; ++i) {
                psi[i] += w * bc.spin[i];
                da[i] += w * la * bc.spin[i];
                db[i] += w * lb * bc.spin[i];
            }
            peak = std::max(peak, std::norm(bc.coeff) * na * na * nb * nb);
        }
        VelocitySample out;
        cdouble ja{0.0, 0.0}, jb{0.0, 0.0};
        for (int i = 0; i < 4; ++i) {
            out.density += std::norm(psi[i]);
            ja += std::conj(psi[i]) * da[i];
            jb += std::conj(psi[i]) * db[i];
        }
        if (out.density < node_floor_rel * peak || out.density <= 0.0) return out;
        out.v_a = ja.imag() / out.density;
        out.v_b = jb.imag() / out.density;
        out.ok = true;
        return out;
    }

private:
    struct BranchCtx {
        cdouble coeff;
        std::array<cdouble, 4> spin;
        GaussianPacket pa, pb;
        double fa = 0.0, fb = 0.0;
    };
    struct Epoch {
        double s0 = 0.0;
        TwoTimeState state; // at (t_a0 + s0, t_b0 + s0), rebased for active windows
        std::vector<BranchCtx> branches;
    };

    Epoch make_epoch(const TwoTimeState& at_s0, double s0, double s1) const {
        Epoch e;
        e.s0 = s0;
        e.state = at_s0;
        const double mid = 0.5 * (s0 + s1);
        const Window* wa = at_s0.schedule(Subsystem::a).active_at(t_a0_ + mid);
        const Window* wb = at_s0.schedule(Subsystem::b).active_at(t_b0_ + mid);
        auto& branches = e.state.mutable_branches();
        if (wa) detail::rebasis_in_place(branches, Subsystem::a, wa->axis);
        if (wb) detail::rebasis_in_place(branches, Subsystem::b, wb->axis);
        e.state.fold_phases();
        for (const auto& br : branches) {
            BranchCtx bc;
            bc.coeff = br.coeff;
            bc.spin = {br.spin_a.up * br.spin_b.up, br.spin_a.up * br.spin_b.dn,
                       br.spin_a.dn * br.spin_b.up, br.spin_a.dn * br.spin_b.dn};
            bc.pa = br.packet_a;
            bc.pb = br.packet_b;
            bc.fa = wa ? eigen_sign(br.spin_a, wa->axis) * wa->force : 0.0;
            bc.fb = wb ? eigen_sign(br.spin_b, wb->axis) * wb->force : 0.0;
            e.branches.push_back(bc);
        }
        return e;
    }

    const Epoch& epoch_at(double s) const {
        if (s < s_lo_ - 1e-9 || s > s_hi_ + 1e-9)
            throw std::out_of_range("TwoTimeFlow: parameter outside covered range");
        std::size_t lo = 0, hi = epochs_.size();
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (epochs_[mid].s0 <= s)
                lo = mid;
            else
                hi = mid;
        }
        return epochs_[lo];
    }

    /// Closed-form propagation of one packet by ds under constant force,
    /// evaluated at q together with the log-derivative factor.
    static void eval_packet(const GaussianPacket& p, double f, double ds, double q, cdouble& g,
                            cdouble& logderiv, double& norm_const) {
        const double c = p.center + p.momentum * ds + 0.5 * f * ds * ds;
        const double k = p.momentum + f * ds;
        const cdouble growth = 1.0 + cdouble(0.0, 1.0) * p.alpha * ds;
        const cdouble alpha = p.alpha / growth;
        const double action = 0.5 * p.momentum * p.momentum * ds + p.momentum * f * ds * ds +
                              f * f * ds * ds * ds / 3.0 + f * p.center * ds;
        const double phase = p.phase + action - 0.5 * std::atan2(growth.imag(), growth.real());
        const double u = q - c;
        norm_const = std::pow(alpha.real() / kPi, 0.25);
        g = norm_const * std::exp(cdouble(0.0, phase + k * u) - 0.5 * alpha * u * u);
        logderiv = cdouble(0.0, k) - alpha * u;
    }

    double t_a0_, t_b0_, s_lo_, s_hi_;
    std::vector<Epoch> epochs_;
};

struct SynchronizedPoint {
    double T_a = 0.0, Q_a = 0.0, T_b = 0.0, Q_b = 0.0;
};

struct PathNode {
    double s, q_a, q_b, v_a, v_b;
};

struct PathFlags {
    bool node_abort = false;
    bool step_underflow = false;
    bool hop = false;
    bool zero_collapse = false;

    bool any() const { return node_abort || step_underflow || hop || zero_collapse; }
};

/// A synchronized 2-path: T_a(s) = t_a0 + s and T_b(s) = t_a0 + h + s by
/// construction (dT/ds = 1, h constant along the path); positions are dense
/// cubic-Hermite output over the accepted integrator nodes.
class SynchronizedPath {
public:
    SynchronizedPath() = default;
    SynchronizedPath(double t_a0, double t_b0) : t_a0_(t_a0), t_b0_(t_b0) {}

    double t_a0() const { return t_a0_; }
    double t_b0() const { return t_b0_; }
    double h() const { return t_b0_ - t_a0_; }
    double s_begin() const { return nodes_.empty() ? 0.0 : nodes_.front().s; }
    double s_end() const { return nodes_.empty() ? 0.0 : nodes_.back().s; }
    const std::vector<PathNode>& nodes() const { return nodes_; }
    std::vector<PathNode>& nodes() { return nodes_; }
    PathFlags& flags() { return flags_; }
    const PathFlags& flags() const { return flags_; }

    SynchronizedPoint point(double s) const {
        const auto [qa, qb] = positions(s);
        return SynchronizedPoint{t_a0_ + s, qa, t_b0_ + s, qb};
    }

    std::pair<double, double> positions(double s) const {
        if (nodes_.empty()) throw std::out_of_range("SynchronizedPath: empty path");
        if (s < nodes_.front().s - 1e-9 || s > nodes_.back().s + 1e-9)
            throw std::out_of_range("SynchronizedPath: parameter outside span");
        s = std::clamp(s, nodes_.front().s, nodes_.back().s);
        std::size_t lo = 0, hi = nodes_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (nodes_[mid].s <= s)
                lo = mid;
            else
                hi = mid;
        }
        const PathNode& n0 = nodes_[lo];
        const PathNode& n1 = nodes_[lo + 1];
        const double dt = n1.s - n0.s;
        if (dt <= 0.0) return {n0.q_a, n0.q_b};
        const double th = (s - n0.s) / dt;
        auto hermite = [&](double y0, double v0, double y1, double v1) {
            const double t2 = th * th, t3 = t2 * th;
            return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + th) * dt * v0 +
                   (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * dt * v1;
        };
        return {hermite(n0.q_a, n0.v_a, n1.q_a, n1.v_a), hermite(n0.q_b, n0.v_b, n1.q_b, n1.v_b)};
    }

private:
    double t_a0_ = 0.0, t_b0_ = 0.0;
    std::vector<PathNode> nodes_;
    PathFlags flags_;
};

namespace detail {

/// Dormand-Prince 5(4) step of the planar system dq/ds = v(s, q).
struct Rk45Stepper {
    const TwoTimeFlow& flow;
    double node_floor_rel;

    bool eval(double s, double qa, double qb, double& va, double& vb) const {
        const auto v = flow.eval(s, qa, qb, node_floor_rel);
        va = v.v_a;
        vb = v.v_b;
        return v.ok;
    }
};

} // namespace detail

/// Integrates dQ_k/ds = v_k along the flow from (q_a0, q_b0) at s0 to s1
/// with an embedded Dormand-Prince 4(5) pair, adaptive steps, and dense
/// output nodes. Aborts (with a flag) near wave-function nodes or on step
/// underflow.
inline SynchronizedPath integrate(const TwoTimeFlow& flow, double q_a0, double q_b0, double s0,
                                  double s1, const IntegratorConfig& cfg = {}) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    if (!(s1 >= s0)) throw std::invalid_argument("integrate: s1 must be >= s0");
    SynchronizedPath path(flow.t_a0(), flow.t_b0());
    detail::Rk45Stepper f{flow, cfg.node_floor_rel};

    const std::vector<double> epoch_cuts = flow.boundaries();
    auto next_bound = [&](double s) {
        double bound = s1;
        for (double c : epoch_cuts)
            if (c > s + 1e-13 && c < bound) bound = c;
        if (cfg.grid_cap > 0.0) {
            const double next_grid = (std::floor(s / cfg.grid_cap + 1e-9) + 1.0) * cfg.grid_cap;
            if (next_grid > s + 1e-13 && next_grid < bound) bound = next_grid;
        }
        return bound;
    };

    double s = s0, qa = q_a0, qb = q_b0;
    double k1a, k1b;
    if (!f.eval(s, qa, qb, k1a, k1b)) {
        path.flags().node_abort = true;
        return path;
    }
    path.nodes().push_back({s, qa, qb, k1a, k1b});

    double h = std::min(cfg.max_step, std::max(1e-6, (s1 - s0) * 1e-3));
    const double h_min = std::max(1e-14, (s1 - s0) * 1e-13);
    int guard = 0;
    while (s < s1 - 1e-13) {
        if (++guard > 2000000) {
            path.flags().step_underflow = true;
            break;
        }
        const double bound = next_bound(s);
        double hs = std::min(h, cfg.max_step);
        if (s + hs > bound) hs = bound - s;
        if (hs < h_min) {
            path.flags().step_underflow = true;
            break;
        }

        double k2a, k2b, k3a, k3b, k4a, k4b, k5a, k5b, k6a, k6b, k7a, k7b;
        bool ok = f.eval(s + c2 * hs, qa + hs * a21 * k1a, qb + hs * a21 * k1b, k2a, k2b) &&
                  f.eval(s + c3 * hs, qa + hs * (a31 * k1a + a32 * k2a), qb + hs * (a31 * k1b + a32 * k2b),
                         k3a, k3b) &&
                  f.eval(s + c4 * hs, qa + hs * (a41 * k1a + a42 * k2a + a43 * k3a),
                         qb + hs * (a41 * k1b + a42 * k2b + a43 * k3b), k4a, k4b) &&
                  f.eval(s + c5 * hs, qa + hs * (a51 * k1a + a52 * k2a + a53 * k3a + a54 * k4a),
                         qb + hs * (a51 * k1b + a52 * k2b + a53 * k3b + a54 * k4b), k5a, k5b) &&
                  f.eval(s + hs, qa + hs * (a61 * k1a + a62 * k2a + a63 * k3a + a64 * k4a + a65 * k5a),
                         qb + hs * (a61 * k1b + a62 * k2b + a63 * k3b + a64 * k4b + a65 * k5b), k6a, k6b);
        if (!ok) {
            path.flags().node_abort = true;
            break;
        }
        const double ya = qa + hs * (b1 * k1a + b3 * k3a + b4 * k4a + b5 * k5a + b6 * k6a);
        const double yb = qb + hs * (b1 * k1b + b3 * k3b + b4 * k4b + b5 * k5b + b6 * k6b);
        if (!f.eval(s + hs, ya, yb, k7a, k7b)) {
            path.flags().node_abort = true;
            break;
        }
        const double erra = hs * (e1 * k1a + e3 * k3a + e4 * k4a + e5 * k5a + e6 * k6a + e7 * k7a);
        const double errb = hs * (e1 * k1b + e3 * k3b + e4 * k4b + e5 * k5b + e6 * k6b + e7 * k7b);
        const double sca = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(qa), std::abs(ya));
        const double scb = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(qb), std::abs(yb));
        const double err = std::sqrt(0.5 * ((erra / sca) * (erra / sca) + (errb / scb) * (errb / scb)));

        if (err <= 1.0) {
            s += hs;
            qa = ya;
            qb = yb;
            k1a = k7a;
            k1b = k7b;
            path.nodes().push_back({s, qa, qb, k1a, k1b});
        }
        const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h = hs * std::clamp(fac, 0.2, 5.0);
    }
    return path;
}

/// Reads the crossing point of the path with the slice (t_a*, t_b*): Q_a at
/// the parameter where T_a = t_a* and Q_b at the (generally different)
/// parameter where T_b = t_b*.
inline std::pair<double, double> crossing(const SynchronizedPath& path, double t_a_star,
                                          double t_b_star) {
    const double s_a = t_a_star - path.t_a0();
    const double s_b = t_b_star - path.t_b0();
    const double q_a = path.positions(s_a).first;
    const double q_b = path.positions(s_b).second;
    return {q_a, q_b};
}

} // namespace mtbohm

#endif
