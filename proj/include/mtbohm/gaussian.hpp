#ifndef MTBOHM_GAUSSIAN_HPP
#define MTBOHM_GAUSSIAN_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "mtbohm/faddeeva.hpp"

namespace mtbohm {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Normalized complex Gaussian in one dimension (hbar = m = 1):
///
///   g(x) = (Re(alpha)/pi)^(1/4) exp(-alpha/2 (x-center)^2
///                                   + i momentum (x-center) + i phase)
///
/// so |g|^2 has width sigma = 1/sqrt(Re alpha) in the sense
/// |g(x)|^2 ~ exp(-(x-center)^2 / sigma^2). The L2 norm is 1 for every
/// alpha with positive real part.
struct GaussianPacket {
    double center = 0.0;
    double momentum = 0.0;
    cdouble alpha = cdouble(1.0, 0.0);
    double phase = 0.0;

    static GaussianPacket fresh(double center, double momentum, double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("GaussianPacket: sigma must be positive");
        return GaussianPacket{center, momentum, cdouble(1.0 / (sigma * sigma), 0.0), 0.0};
    }

    double sigma() const { return 1.0 / std::sqrt(alpha.real()); }

    double norm_const() const { return std::pow(alpha.real() / kPi, 0.25); }

    cdouble value(double x) const {
        const double u = x - center;
        return norm_const() *
               std::exp(cdouble(0.0, phase) + cdouble(0.0, momentum * u) - 0.5 * alpha * u * u);
    }

    /// g'(x) = (-alpha (x-center) + i momentum) g(x).
    cdouble derivative(double x) const {
        const double u = x - center;
        return (cdouble(0.0, momentum) - alpha * u) * value(x);
    }

    /// Exact evolution under H = p^2/2 - force*x held for a duration dt
    /// (free motion for force = 0). The center and momentum follow the
    /// classical path, the width parameter disperses as in free motion, and
    /// the phase accumulates the classical action plus the spreading phase.
    /// Negative dt applies the inverse unitary.
    GaussianPacket propagated(double dt, double force = 0.0) const {
        if (dt == 0.0 && force == 0.0) return *this;
        GaussianPacket out;
        out.center = center + momentum * dt + 0.5 * force * dt * dt;
        out.momentum = momentum + force * dt;
        const cdouble growth = 1.0 + cdouble(0.0, 1.0) * alpha * dt;
        out.alpha = alpha / growth;
        const double action = 0.5 * momentum * momentum * dt + momentum * force * dt * dt +
                              force * force * dt * dt * dt / 3.0 + force * center * dt;
        out.phase = phase + action - 0.5 * std::atan2(growth.imag(), growth.real());
        return out;
    }

    bool approx_equal(const GaussianPacket& other, double tol) const {
        return std::abs(center - other.center) <= tol && std::abs(momentum - other.momentum) <= tol &&
               std::abs(alpha - other.alpha) <= tol && std::abs(phase - other.phase) <= tol;
    }
};

namespace detail {

struct OverlapKernel {
    cdouble beta;     // conj(alpha1) + alpha2
    cdouble mu;       // stationary point of the combined exponent
    cdouble e0;       // combined exponent at mu (Re bounded, never overflows)
    double a12;       // product of normalization constants
    cdouble sqrt_hb;  // sqrt(beta/2), principal branch (Re > 0)
};

inline OverlapKernel overlap_kernel(const GaussianPacket& g1, const GaussianPacket& g2) {
    OverlapKernel k;
    const cdouble a1 = std::conj(g1.alpha);
    const cdouble a2 = g2.alpha;
    k.beta = a1 + a2;
    const cdouble b = a1 * g1.center + a2 * g2.center + cdouble(0.0, g2.momentum - g1.momentum);
    const cdouble d = -0.5 * a1 * g1.center * g1.center - 0.5 * a2 * g2.center * g2.center +
                      cdouble(0.0, g1.momentum * g1.center - g2.momentum * g2.center) +
                      cdouble(0.0, g2.phase - g1.phase);
    k.mu = b / k.beta;
    k.e0 = d + 0.5 * b * b / k.beta;
    k.a12 = g1.norm_const() * g2.norm_const();
    k.sqrt_hb = std::sqrt(0.5 * k.beta);
    return k;
}

} // namespace detail

/// Full-line overlap integral of conj(g1) * g2.
inline cdouble overlap_full(const GaussianPacket& g1, const GaussianPacket& g2) {
    const auto k = detail::overlap_kernel(g1, g2);
    return k.a12 * std::exp(k.e0) * std::sqrt(2.0 * kPi / k.beta);
}

/// Interval overlap integral of conj(g1) * g2 over [lo, hi]; lo/hi may be
/// +-infinity. Evaluated through scaled complementary error functions so
/// that widely separated packets and large momentum differences never
/// overflow intermediate quantities.
inline cdouble overlap_interval(const GaussianPacket& g1, const GaussianPacket& g2, double lo,
                                double hi) {
    const auto k = detail::overlap_kernel(g1, g2);
    const cdouble pref = k.a12 * 0.5 * std::sqrt(kPi) / k.sqrt_hb;

    // exp(e0) * erfc(z) at an interval endpoint; the limits at +-infinity
    // are 0 and 2 exp(e0).
    auto scaled_term = [&](double x, bool is_inf, int inf_sign) -> cdouble {
        if (is_inf) {
            if (inf_sign > 0) return cdouble(0.0, 0.0);
            return 2.0 * std::exp(k.e0);
        }
        const cdouble z = k.sqrt_hb * (x - k.mu);
        return scaled_erfc(k.e0, z);
    };

    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    const cdouble t_lo = scaled_term(lo, lo_inf, lo > 0 ? 1 : -1);
    const cdouble t_hi = scaled_term(hi, hi_inf, hi > 0 ? 1 : -1);
    return pref * (t_lo - t_hi);
}

/// CDF of |g|^2 up to x (real, monotone).
inline double packet_cdf(const GaussianPacket& g, double x) {
    const double s = g.sigma(); // |g|^2 ~ exp(-u^2/s^2), std dev s/sqrt(2)
    return 0.5 * std::erfc(-(x - g.center) / s);
}

} // namespace mtbohm

#endif
