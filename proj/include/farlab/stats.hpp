#ifndef FARLAB_STATS_HPP
#define FARLAB_STATS_HPP

// Small descriptive statistics and the Kolmogorov–Smirnov normality test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "farlab/error.hpp"

namespace farlab::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> x) {
    if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

/// Standard error of the mean.
inline double standard_error(std::span<const double> x) {
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

/// Non-excess kurtosis m₄/m₂² (3 for a normal law).
inline double kurtosis(std::span<const double> x) {
    const double m = mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = (v - m) * (v - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    return m4 / (m2 * m2);
}

inline double median(std::vector<double> x) {
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(x.begin(), x.end());
    const std::size_t h = x.size() / 2;
    return x.size() % 2 ? x[h] : 0.5 * (x[h - 1] + x[h]);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2j²λ²), the Kolmogorov survival function.
inline double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        s += (j % 2 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
    double statistic;
    double p_value;
};

/// Two-sided one-sample KS test against N(mu, sigma²), asymptotic p-value
/// with Stephens' small-sample correction.
inline KsResult ks_normal(std::vector<double> x, double mu, double sigma) {
    if (x.empty()) throw invalid_argument("ks_normal: empty sample");
    if (!(sigma > 0.0)) throw invalid_argument("ks_normal: sigma must be > 0");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = normal_cdf((x[i] - mu) / sigma);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double rn = std::sqrt(n);
    return {d, kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d)};
}

} // namespace farlab::stats

#endif // FARLAB_STATS_HPP
