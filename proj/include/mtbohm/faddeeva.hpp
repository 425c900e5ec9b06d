#ifndef MTBOHM_FADDEEVA_HPP
#define MTBOHM_FADDEEVA_HPP

#include <array>
#include <cmath>
#include <complex>

namespace mtbohm {

namespace detail {

/// Weideman rational approximation of the Faddeeva function
/// w(z) = exp(-z^2) erfc(-iz), valid for Im(z) >= 0.
/// Coefficients are computed once from a length-2M trigonometric transform.
template <int N = 48>
class WeidemanTable {
public:
    static const WeidemanTable& instance() {
        static const WeidemanTable table;
        return table;
    }

    std::complex<double> eval(std::complex<double> z) const {
        const std::complex<double> iz(-z.imag(), z.real());
        const std::complex<double> d = L_ - iz;
        const std::complex<double> Z = (L_ + iz) / d;
        std::complex<double> p{0.0, 0.0};
        for (int n = N - 1; n >= 0; --n) p = p * Z + a_[n];
        return 2.0 * p / (d * d) + kInvSqrtPi / d;
    }

private:
    WeidemanTable() {
        constexpr int M = 2 * N;
        constexpr int M2 = 2 * M;
        L_ = std::sqrt(N / std::sqrt(2.0));
        // Samples of exp(-t^2)(L^2+t^2) at t = L tan(theta/2), theta = j*pi/M
        // wrapped to (-pi, pi].
        std::array<double, M2> f{};
        for (int j = 0; j < M2; ++j) {
            double theta = j * kPi / M;
            if (theta > kPi) theta -= 2.0 * kPi;
            const double half = 0.5 * theta;
            if (std::abs(std::abs(half) - kPi / 2) < 1e-14) {
                f[j] = 0.0;
                continue;
            }
            const double t = L_ * std::tan(half);
            f[j] = std::exp(-t * t) * (L_ * L_ + t * t);
        }
        for (int n = 0; n < N; ++n) {
            double acc = 0.0;
            for (int j = 0; j < M2; ++j)
                acc += f[j] * std::cos(2.0 * kPi * j * (n + 1) / M2);
            a_[n] = acc / M2;
        }
    }

    static constexpr double kPi = 3.14159265358979323846264338327950288;
    static constexpr double kInvSqrtPi = 0.56418958354775628694807945156077259;

    double L_;
    std::array<double, N> a_{}; // a_[n] multiplies Z^n
};

} // namespace detail

/// Faddeeva function w(z) for Im(z) >= 0; |w| <= 1 there.
inline std::complex<double> faddeeva_w(std::complex<double> z) {
    if (z.imag() < 0.0) {
        // Reflection w(-z) = 2 exp(-z^2) - w(z); callers stay in the upper
        // half plane, this keeps the function total.
        const std::complex<double> mz = -z;
        return 2.0 * std::exp(-(mz * mz)) - detail::WeidemanTable<>::instance().eval(mz);
    }
    return detail::WeidemanTable<>::instance().eval(z);
}

/// erfc(z) computed without overflow in the scaled form used by the
/// Gaussian interval integrals: returns exp(e0) * erfc(z) given any complex
/// pre-exponent e0 such that exp(e0 - z^2) is representable.
inline std::complex<double> scaled_erfc(std::complex<double> e0, std::complex<double> z) {
    if (z.real() >= 0.0) {
        const std::complex<double> iz(-z.imag(), z.real());
        return std::exp(e0 - z * z) * faddeeva_w(iz);
    }
    const std::complex<double> miz(z.imag(), -z.real());
    return 2.0 * std::exp(e0) - std::exp(e0 - z * z) * faddeeva_w(miz);
}

} // namespace mtbohm

#endif
