#ifndef MTBOHM_STATS_HPP
#define MTBOHM_STATS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace mtbohm {

/// Kolmogorov-Smirnov statistic of samples against a CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Asymptotic KS critical value at significance alpha.
inline double ks_critical(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

namespace detail {

/// Regularized lower incomplete gamma P(a, x) by series / continued fraction.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    // Lentz continued fraction for Q(a, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, f = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - gln) * f;
}

} // namespace detail

/// p-value of a chi-squared statistic with the given degrees of freedom.
inline double chi_squared_pvalue(double stat, double dof) {
    return 1.0 - detail::gamma_p(0.5 * dof, 0.5 * stat);
}

/// Pearson chi-squared statistic of observed counts vs expected
/// probabilities (cells with tiny expectation are pooled into the largest).
inline double chi_squared_statistic(const std::vector<std::size_t>& observed,
                                    const std::vector<double>& expected_prob, std::size_t n,
                                    std::size_t* dof_out = nullptr) {
    if (observed.size() != expected_prob.size())
        throw std::invalid_argument("chi_squared_statistic: size mismatch");
    double stat = 0.0;
    std::size_t used = 0;
    double pooled_obs = 0.0, pooled_exp = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_prob[i] * static_cast<double>(n);
        if (e < 5.0) {
            pooled_obs += static_cast<double>(observed[i]);
            pooled_exp += e;
            continue;
        }
        const double diff = static_cast<double>(observed[i]) - e;
        stat += diff * diff / e;
        ++used;
    }
    if (pooled_exp >= 5.0) {
        const double diff = pooled_obs - pooled_exp;
        stat += diff * diff / pooled_exp;
        ++used;
    }
    if (dof_out) *dof_out = used > 1 ? used - 1 : 1;
    return stat;
}

/// Total-variation distance between two probability vectors.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return 0.5 * acc;
}

/// Standard deviation of a binomial fraction estimate.
inline double binomial_sigma(double p, std::size_t n) {
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

} // namespace mtbohm

#endif
