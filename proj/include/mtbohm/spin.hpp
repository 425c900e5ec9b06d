#ifndef MTBOHM_SPIN_HPP
#define MTBOHM_SPIN_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

namespace mtbohm {

enum class Axis { x, z };
enum class Subsystem { a, b };

inline const char* axis_name(Axis ax) { return ax == Axis::x ? "x" : "z"; }
inline const char* subsystem_name(Subsystem s) { return s == Subsystem::a ? "a" : "b"; }

/// Two-component spinor in the sigma_z eigenbasis.
struct Spinor2 {
    std::complex<double> up{0.0, 0.0};
    std::complex<double> dn{0.0, 0.0};

    double norm() const { return std::sqrt(std::norm(up) + std::norm(dn)); }

    Spinor2 normalized() const {
        const double n = norm();
        if (n == 0.0) throw std::invalid_argument("Spinor2: zero spinor");
        return Spinor2{up / n, dn / n};
    }
};

inline std::complex<double> inner(const Spinor2& l, const Spinor2& r) {
    return std::conj(l.up) * r.up + std::conj(l.dn) * r.dn;
}

inline constexpr double kInvSqrt2 = 0.70710678118654752440084436210484904;

/// Eigenstate of sigma_axis with the given eigenvalue sign.
inline Spinor2 eigenstate(Axis ax, int sign) {
    if (sign != +1 && sign != -1) throw std::invalid_argument("eigenstate: sign must be +-1");
    if (ax == Axis::z) return sign > 0 ? Spinor2{1.0, 0.0} : Spinor2{0.0, 1.0};
    return sign > 0 ? Spinor2{kInvSqrt2, kInvSqrt2} : Spinor2{kInvSqrt2, -kInvSqrt2};
}

/// If s is (numerically) an eigenstate of sigma_axis, returns +-1, else 0.
inline int eigen_sign(const Spinor2& s, Axis ax, double tol = 1e-12) {
    const auto cp = inner(eigenstate(ax, +1), s);
    const auto cm = inner(eigenstate(ax, -1), s);
    if (std::abs(cm) <= tol) return +1;
    if (std::abs(cp) <= tol) return -1;
    return 0;
}

} // namespace mtbohm

#endif
