#ifndef MTBOHM_MEASUREMENT_HPP
#define MTBOHM_MEASUREMENT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "mtbohm/spin.hpp"

namespace mtbohm {

using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;

inline Matrix2c pauli(Axis ax) {
    Matrix2c m;
    if (ax == Axis::z)
        m << 1.0, 0.0, 0.0, -1.0;
    else
        m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

/// Projector onto the eigenspace of a Hermitian operator with eigenvalues
/// within tol of target (eigenspace-based, degeneracy-safe).
inline Matrix2c eigenspace_projector(const Matrix2c& herm, double target, double tol = 1e-9) {
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(herm);
    Matrix2c proj = Matrix2c::Zero();
    for (int i = 0; i < 2; ++i)
        if (std::abs(es.eigenvalues()(i) - target) <= tol)
            proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    return proj;
}

/// exp(-i H t) for Hermitian H.
inline Matrix2c evolution_operator(const Matrix2c& h, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(h);
    Matrix2c out = Matrix2c::Zero();
    for (int i = 0; i < 2; ++i) {
        const std::complex<double> ph = std::exp(std::complex<double>(0.0, -es.eigenvalues()(i) * t));
        out += ph * es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    }
    return out;
}

inline Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
    Matrix4c out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

/// Heisenberg data of the spin-only two-particle model: the state at
///. (t_a, t_b) = (0, 0) and the two commuting subsystem Hamiltonians.
struct HeisenbergModel {
    Vector4c psi0;
    Matrix2c h_a = Matrix2c::Zero();
    Matrix2c h_b = Matrix2c::Zero();

    void validate() const {
        if (std::abs(psi0.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("HeisenbergModel: state must be normalized");
        if ((h_a - h_a.adjoint()).norm() > 1e-12 || (h_b - h_b.adjoint()).norm() > 1e-12)
            throw std::invalid_argument("HeisenbergModel: Hamiltonians must be Hermitian");
    }
};

struct MeasurementEvent {
    Subsystem sub = Subsystem::a;
    double time = 0.0;
    Axis axis = Axis::x;
    int outcome = +1;
};

/// Spin part of Hardy's state, c1 |+z,-z> + c2 |-x,+z> with
/// c1 = 1/sqrt(3), c2 = -sqrt(2/3). Basis order (+z+z, +z-z, -z+z, -z-z).
inline Vector4c hardy_spin_state() {
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    const double c2 = -std::sqrt(2.0) * inv_sqrt3 * kInvSqrt2;
    Vector4c v;
    v << c2, inv_sqrt3, -c2, 0.0;
    return v;
}

namespace detail {

/// Heisenberg projector pi(t) = U(-t) pi U(t) lifted to the pair space.
inline Matrix4c heisenberg_projector(const HeisenbergModel& model, const MeasurementEvent& ev) {
    const Matrix2c h = ev.sub == Subsystem::a ? model.h_a : model.h_b;
    const Matrix2c u = evolution_operator(h, ev.time);
    const Matrix2c proj = eigenspace_projector(pauli(ev.axis), static_cast<double>(ev.outcome));
    const Matrix2c heis = u.adjoint() * proj * u;
    return ev.sub == Subsystem::a ? kron(heis, Matrix2c::Identity()) : kron(Matrix2c::Identity(), heis);
}

inline void check_ordering(const std::vector<MeasurementEvent>& events) {
    double last_a = -std::numeric_limits<double>::infinity();
    double last_b = -std::numeric_limits<double>::infinity();
    for (const auto& ev : events) {
        double& last = ev.sub == Subsystem::a ? last_a : last_b;
        if (!(ev.time > last))
            throw std::invalid_argument("measurement events: per-subsystem times must increase");
        last = ev.time;
    }
}

/// Ordered product: all b projectors (latest leftmost) then all a projectors.
inline Vector4c apply_projector_product(const HeisenbergModel& model,
                                        const std::vector<MeasurementEvent>& events) {
    check_ordering(events);
    Vector4c v = model.psi0;
    for (const auto& ev : events)
        if (ev.sub == Subsystem::a) v = heisenberg_projector(model, ev) * v;
    for (const auto& ev : events)
        if (ev.sub == Subsystem::b) v = heisenberg_projector(model, ev) * v;
    return v;
}

} // namespace detail

/// Joint probability of a sequence of outcomes:
/// || pi^b_l(t^b_l) ... pi^b_1(t^b_1) pi^a_k(t^a_k) ... pi^a_1(t^a_1) psi ||^2.
inline double joint_probability(const HeisenbergModel& model,
                                const std::vector<MeasurementEvent>& events) {
    model.validate();
    const Vector4c v = detail::apply_projector_product(model, events);
    return v.squaredNorm();
}

/// Multitime translation of the whole description: event times shift by
/// -tau on their subsystem and the Heisenberg state picks up
/// U^a_{tau_a} U^b_{tau_b}. Leaves every joint probability unchanged.
inline std::pair<HeisenbergModel, std::vector<MeasurementEvent>> shift_events(
    const HeisenbergModel& model, const std::vector<MeasurementEvent>& events, double tau_a,
    double tau_b) {
    HeisenbergModel out = model;
    const Matrix4c u =
        kron(evolution_operator(model.h_a, tau_a), evolution_operator(model.h_b, tau_b));
    out.psi0 = u * model.psi0;
    std::vector<MeasurementEvent> shifted = events;
    for (auto& ev : shifted) ev.time -= ev.sub == Subsystem::a ? tau_a : tau_b;
    return {out, shifted};
}

/// Collapsed wave function conditioned on the prior outcomes: the ordered
/// projector product applied to psi, renormalized.
inline Vector4c collapse(const HeisenbergModel& model, const std::vector<MeasurementEvent>& prior) {
    if (prior.empty()) throw std::invalid_argument("collapse: prior must be nonempty");
    const Vector4c v = detail::apply_projector_product(model, prior);
    const double n = v.norm();
    if (n * n <= 1e-300) throw std::domain_error("collapse: conditioning on zero-probability event");
    return v / n;
}

struct BSetting {
    double time = 0.0;
    Axis axis = Axis::x;
};

/// Maximum over a-outcome patterns of the difference in marginal probability
/// between two choices of what is measured on subsystem b.
inline double no_signaling_gap(const HeisenbergModel& model,
                               const std::vector<MeasurementEvent>& a_events,
                               const std::vector<BSetting>& b_setting_1,
                               const std::vector<BSetting>& b_setting_2) {
    auto marginal = [&](const std::vector<BSetting>& setting) {
        // Sum the joint over all b outcomes.
        const std::size_t m = setting.size();
        double total = 0.0;
        for (std::size_t bits = 0; bits < (1ull << m); ++bits) {
            std::vector<MeasurementEvent> events = a_events;
            for (std::size_t i = 0; i < m; ++i)
                events.push_back(MeasurementEvent{Subsystem::b, setting[i].time, setting[i].axis,
                                                  (bits >> i) & 1 ? +1 : -1});
            total += joint_probability(model, events);
        }
        return total;
    };
    return std::abs(marginal(b_setting_1) - marginal(b_setting_2));
}

} // namespace mtbohm

#endif
