#ifndef MTBOHM_TWO_TIME_STATE_HPP
#define MTBOHM_TWO_TIME_STATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtbohm/gaussian.hpp"
#include "mtbohm/spin.hpp"

namespace mtbohm {

/// One active interval of a spin-dependent linear potential
/// V = -force * sigma_axis * q. The eigenbranch with sigma_axis = s feels
/// the constant force s * force while the window is on.
struct Window {
    double t_start = 0.0;
    double t_end = 0.0;
    Axis axis = Axis::x;
    double force = 0.0;
};

struct PotentialSchedule {
    std::vector<Window> windows;

    void validate() const {
        for (const auto& w : windows)
            if (!(w.t_start < w.t_end))
                throw std::invalid_argument("PotentialSchedule: window must have t_start < t_end");
        for (std::size_t i = 0; i < windows.size(); ++i)
            for (std::size_t j = i + 1; j < windows.size(); ++j) {
                const auto& u = windows[i];
                const auto& v = windows[j];
                if (u.t_start < v.t_end && v.t_start < u.t_end)
                    throw std::invalid_argument("PotentialSchedule: windows overlap");
            }
    }

    /// Window containing t in its half-open interval [t_start, t_end), if any.
    const Window* active_at(double t) const {
        for (const auto& w : windows)
            if (t >= w.t_start && t < w.t_end) return &w;
        return nullptr;
    }
};

/// One product term coeff * spin_a (x) spin_b * packet_a(q_a) * packet_b(q_b).
/// Spin factors are unit vectors; all weight and phase live in coeff
/// (packet phases are folded into coeff whenever branches are updated).
struct Branch {
    std::complex<double> coeff{0.0, 0.0};
    Spinor2 spin_a, spin_b;
    GaussianPacket packet_a, packet_b;
};

/// Two-time wave function psi(t_a, q_a, t_b, q_b) for a pair of
/// noninteracting spin-1/2 particles, one spatial dimension each, stored as
/// a finite sum of product branches. Immutable value type: every operation
/// returns a new state.
class TwoTimeState {
public:
    TwoTimeState() = default;
    TwoTimeState(std::vector<Branch> branches, double t_a, double t_b, PotentialSchedule sched_a,
                 PotentialSchedule sched_b)
        : branches_(std::move(branches)), t_a_(t_a), t_b_(t_b), sched_a_(std::move(sched_a)),
          sched_b_(std::move(sched_b)) {
        sched_a_.validate();
        sched_b_.validate();
        fold_phases();
    }

    const std::vector<Branch>& branches() const { return branches_; }
    double t_a() const { return t_a_; }
    double t_b() const { return t_b_; }
    double t(Subsystem s) const { return s == Subsystem::a ? t_a_ : t_b_; }
    const PotentialSchedule& schedule(Subsystem s) const {
        return s == Subsystem::a ? sched_a_ : sched_b_;
    }

    std::vector<Branch>& mutable_branches() { return branches_; }
    void set_time(Subsystem s, double t) { (s == Subsystem::a ? t_a_ : t_b_) = t; }

    /// Moves packet phases into coefficients so branch comparisons are exact.
    void fold_phases() {
        for (auto& br : branches_) {
            const double ph = br.packet_a.phase + br.packet_b.phase;
            if (ph != 0.0) {
                br.coeff *= std::exp(std::complex<double>(0.0, ph));
                br.packet_a.phase = 0.0;
                br.packet_b.phase = 0.0;
            }
        }
    }

    /// Coalesces branches whose spin factors and packets coincide within tol
    /// and drops branches with negligible weight.
    void merge_branches(double tol = 1e-10) {
        fold_phases();
        std::vector<Branch> merged;
        for (const auto& br : branches_) {
            bool absorbed = false;
            for (auto& m : merged) {
                if (std::abs(inner(m.spin_a, br.spin_a) - 1.0) <= tol &&
                    std::abs(inner(m.spin_b, br.spin_b) - 1.0) <= tol &&
                    m.packet_a.approx_equal(br.packet_a, tol) &&
                    m.packet_b.approx_equal(br.packet_b, tol)) {
                    m.coeff += br.coeff;
                    absorbed = true;
                    break;
                }
            }
            if (!absorbed) merged.push_back(br);
        }
        double cmax = 0.0;
        for (const auto& m : merged) cmax = std::max(cmax, std::abs(m.coeff));
        std::vector<Branch> kept;
        for (const auto& m : merged)
            if (std::abs(m.coeff) > 1e-12 * cmax) kept.push_back(m);
        branches_ = std::move(kept);
    }

private:
    std::vector<Branch> branches_;
    double t_a_ = 0.0;
    double t_b_ = 0.0;
    PotentialSchedule sched_a_, sched_b_;
};

namespace detail {

inline const Spinor2& spin_of(const Branch& br, Subsystem s) {
    return s == Subsystem::a ? br.spin_a : br.spin_b;
}
inline Spinor2& spin_of(Branch& br, Subsystem s) { return s == Subsystem::a ? br.spin_a : br.spin_b; }
inline const GaussianPacket& packet_of(const Branch& br, Subsystem s) {
    return s == Subsystem::a ? br.packet_a : br.packet_b;
}
inline GaussianPacket& packet_of(Branch& br, Subsystem s) {
    return s == Subsystem::a ? br.packet_a : br.packet_b;
}

/// Expands the chosen spin factor of every branch in the sigma_axis
/// eigenbasis. Branches already in an eigenstate are left untouched.
inline void rebasis_in_place(std::vector<Branch>& branches, Subsystem sub, Axis ax) {
    std::vector<Branch> out;
    out.reserve(branches.size() * 2);
    for (const auto& br : branches) {
        const Spinor2& s = spin_of(br, sub);
        if (eigen_sign(s, ax, 1e-14) != 0) {
            out.push_back(br);
            continue;
        }
        for (int sign : {+1, -1}) {
            const Spinor2 e = eigenstate(ax, sign);
            const auto c = inner(e, s);
            if (std::abs(c) <= 1e-14) continue;
            Branch nb = br;
            nb.coeff = br.coeff * c;
            spin_of(nb, sub) = e;
            out.push_back(nb);
        }
    }
    branches = std::move(out);
}

} // namespace detail

/// Norm squared including inter-branch cross terms (exact branch Gram matrix).
inline double norm_squared(const TwoTimeState& state) {
    const auto& br = state.branches();
    double acc = 0.0;
    for (std::size_t j = 0; j < br.size(); ++j) {
        for (std::size_t l = 0; l < br.size(); ++l) {
            const auto spin = inner(br[j].spin_a, br[l].spin_a) * inner(br[j].spin_b, br[l].spin_b);
            if (std::abs(spin) == 0.0) continue;
            const auto ov = overlap_full(br[j].packet_a, br[l].packet_a) *
                            overlap_full(br[j].packet_b, br[l].packet_b);
            acc += (std::conj(br[j].coeff) * br[l].coeff * spin * ov).real();
        }
    }
    return acc;
}

inline double norm(const TwoTimeState& state) { return std::sqrt(std::max(0.0, norm_squared(state))); }

/// Hardy's state: 1/sqrt(3) ( |+z>_a |-z>_b  -  sqrt(2) |-x>_a |+z>_b ),
/// both configurational factors fresh Gaussians of width sigma at the given
/// centers. Subsystem times start at t0 with empty schedules.
inline TwoTimeState hardy_state(double sigma, double center_a = 0.0, double center_b = 0.0,
                                double t0 = 0.0) {
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    const GaussianPacket ga = GaussianPacket::fresh(center_a, 0.0, sigma);
    const GaussianPacket gb = GaussianPacket::fresh(center_b, 0.0, sigma);
    std::vector<Branch> branches{
        Branch{inv_sqrt3, eigenstate(Axis::z, +1), eigenstate(Axis::z, -1), ga, gb},
        Branch{-std::sqrt(2.0) * inv_sqrt3, eigenstate(Axis::x, -1), eigenstate(Axis::z, +1), ga, gb},
    };
    return TwoTimeState(std::move(branches), t0, t0, {}, {});
}

/// Re-expresses each branch's spin factor of one subsystem in the
/// sigma_axis eigenbasis; leaves the wave function unchanged as a function.
inline TwoTimeState rebasis(const TwoTimeState& state, Subsystem sub, Axis ax) {
    TwoTimeState out = state;
    detail::rebasis_in_place(out.mutable_branches(), sub, ax);
    out.merge_branches();
    return out;
}

enum class TimeDirection { forward, backward };

/// Advances one subsystem's time by dt >= 0 (or applies the inverse unitary
/// when direction is backward). Exact for the piecewise-constant-in-time,
/// linear-in-position potentials of the schedule. Branches are rebased to a
/// window's axis when the evolution enters it, and each eigenbranch feels
/// force +-F inside.
inline TwoTimeState evolve_subsystem(const TwoTimeState& state, Subsystem sub, double dt,
                                     TimeDirection dir = TimeDirection::forward) {
    if (dt < 0.0)
        throw std::invalid_argument(
            "evolve_subsystem: dt must be >= 0 (use TimeDirection::backward for the inverse)");
    TwoTimeState out = state;
    if (dt == 0.0) return out;
    const double signed_dt = dir == TimeDirection::forward ? dt : -dt;
    const double t0 = state.t(sub);
    const double t1 = t0 + signed_dt;
    const auto& sched = state.schedule(sub);

    // Segment boundaries: window edges crossed by [t0, t1].
    std::vector<double> cuts;
    cuts.push_back(t0);
    const double lo = std::min(t0, t1);
    const double hi = std::max(t0, t1);
    for (const auto& w : sched.windows) {
        if (w.t_start > lo && w.t_start < hi) cuts.push_back(w.t_start);
        if (w.t_end > lo && w.t_end < hi) cuts.push_back(w.t_end);
    }
    cuts.push_back(t1);
    std::sort(cuts.begin(), cuts.end());
    if (signed_dt < 0.0) std::reverse(cuts.begin(), cuts.end());

    auto& branches = out.mutable_branches();
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double seg_from = cuts[i];
        const double seg_to = cuts[i + 1];
        if (seg_from == seg_to) continue;
        const double mid = 0.5 * (seg_from + seg_to);
        const Window* win = sched.active_at(mid);
        if (win != nullptr) {
            detail::rebasis_in_place(branches, sub, win->axis);
            for (auto& br : branches) {
                const int sign = eigen_sign(detail::spin_of(br, sub), win->axis);
                detail::packet_of(br, sub) =
                    detail::packet_of(br, sub).propagated(seg_to - seg_from, sign * win->force);
            }
        } else {
            for (auto& br : branches)
                detail::packet_of(br, sub) = detail::packet_of(br, sub).propagated(seg_to - seg_from);
        }
        out.fold_phases();
    }
    out.set_time(sub, t1);
    out.merge_branches();
    return out;
}

/// Unitary multitime translation U_tau = U^a_{tau_a} U^b_{tau_b}; the two
/// factors commute, so the application order is immaterial.
inline TwoTimeState multitime_shift(const TwoTimeState& state, double tau_a, double tau_b) {
    TwoTimeState out = evolve_subsystem(state, Subsystem::a, std::abs(tau_a),
                                        tau_a >= 0.0 ? TimeDirection::forward : TimeDirection::backward);
    return evolve_subsystem(out, Subsystem::b, std::abs(tau_b),
                            tau_b >= 0.0 ? TimeDirection::forward : TimeDirection::backward);
}

/// psi(t_a, q_a, t_b, q_b) as the four z (x) z spin components, ordered
/// (+z+z, +z-z, -z+z, -z-z).
inline std::array<std::complex<double>, 4> amplitude(const TwoTimeState& state, double q_a,
                                                     double q_b) {
    std::array<std::complex<double>, 4> out{};
    for (const auto& br : state.branches()) {
        const auto w = br.coeff * br.packet_a.value(q_a) * br.packet_b.value(q_b);
        out[0] += w * br.spin_a.up * br.spin_b.up;
        out[1] += w * br.spin_a.up * br.spin_b.dn;
        out[2] += w * br.spin_a.dn * br.spin_b.up;
        out[3] += w * br.spin_a.dn * br.spin_b.dn;
    }
    return out;
}

/// Integral of psi^dagger psi over [a_lo, a_hi] x [b_lo, b_hi], including
/// inter-branch cross terms (analytic Gaussian error-function integrals).
inline double region_probability(const TwoTimeState& state, double a_lo, double a_hi, double b_lo,
                                 double b_hi) {
    const auto& br = state.branches();
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < br.size(); ++j) {
        for (std::size_t l = 0; l < br.size(); ++l) {
            const auto spin = inner(br[j].spin_a, br[l].spin_a) * inner(br[j].spin_b, br[l].spin_b);
            if (std::abs(spin) == 0.0) continue;
            const auto ia = overlap_interval(br[j].packet_a, br[l].packet_a, a_lo, a_hi);
            const auto ib = overlap_interval(br[j].packet_b, br[l].packet_b, b_lo, b_hi);
            acc += std::conj(br[j].coeff) * br[l].coeff * spin * ia * ib;
        }
    }
    return std::max(0.0, acc.real());
}

} // namespace mtbohm

#endif
