#pragma once
// Shared helpers for the test suites: independent oracles and small
// statistical utilities. Nothing here may call into the code paths it is
// used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "morphoscale/rng.hpp"
#include "morphoscale/special.hpp"

namespace testsupport {

// All count vectors of the given length summing to total, in lexicographic
// order (enumeration oracle for normalization checks).
inline void enumerate_counts_rec(std::int64_t total, std::size_t length,
                                 std::vector<std::int64_t>& prefix,
                                 std::vector<std::vector<std::int64_t>>& out) {
    if (prefix.size() + 1 == length) {
        prefix.push_back(total);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (std::int64_t c = 0; c <= total; ++c) {
        prefix.push_back(c);
        enumerate_counts_rec(total - c, length, prefix, out);
        prefix.pop_back();
    }
}

inline std::vector<std::vector<std::int64_t>> enumerate_counts(std::int64_t total,
                                                               std::size_t length) {
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> prefix;
    enumerate_counts_rec(total, length, prefix, out);
    return out;
}

// Multinomial log-pmf, independent of the library implementation.
inline double multinomial_log_pmf(const std::vector<std::int64_t>& k,
                                  const std::vector<double>& rho) {
    std::int64_t n = 0;
    for (const auto c : k) n += c;
    double value = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t i = 0; i < k.size(); ++i) {
        value -= std::lgamma(static_cast<double>(k[i]) + 1.0);
        if (k[i] > 0) {
            if (rho[i] <= 0.0) return -std::numeric_limits<double>::infinity();
            value += static_cast<double>(k[i]) * std::log(rho[i]);
        }
    }
    return value;
}

// Monte Carlo estimate of the Dirichlet-Multinomial pmf: the average over
// Dirichlet(alpha) draws of the Multinomial pmf. Returns (mean, std error).
inline std::pair<double, double> dirmult_pmf_monte_carlo(
    const std::vector<std::int64_t>& k, const std::vector<double>& alpha,
    std::size_t draws, morphoscale::Rng& rng) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const auto rho = rng.dirichlet(alpha);
        const double log_pmf = multinomial_log_pmf(k, rho);
        const double pmf = std::isfinite(log_pmf) ? std::exp(log_pmf) : 0.0;
        sum += pmf;
        sum_sq += pmf * pmf;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    const double variance = std::max(sum_sq / n - mean * mean, 0.0);
    return {mean, std::sqrt(variance / n)};
}

// Central finite difference d f / d x_i with a relative step.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i,
                                 double relative_step = 1e-5) {
    const double h = relative_step * std::max(1.0, std::fabs(x[i]));
    const double original = x[i];
    x[i] = original + h;
    const double hi = f(x);
    x[i] = original - h;
    const double lo = f(x);
    x[i] = original;
    return (hi - lo) / (2.0 * h);
}

// One-sample Kolmogorov-Smirnov statistic against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = cdf(samples[i]);
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - c));
        d = std::max(d, std::fabs(c - static_cast<double>(i) / n));
    }
    return d;
}

// Asymptotic KS critical value at significance level alpha:
// sqrt(-ln(alpha/2) / 2) / sqrt(n).
inline double ks_critical_value(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

// Chi-square goodness-of-fit p-value from observed counts and expected
// counts (bins with expected < 5 should be pooled by the caller).
inline double chi_square_gof_pvalue(const std::vector<double>& observed,
                                    const std::vector<double>& expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
    }
    const double dof = static_cast<double>(observed.size()) - 1.0;
    return morphoscale::chi_square_sf(stat, dof);
}

}  // namespace testsupport
