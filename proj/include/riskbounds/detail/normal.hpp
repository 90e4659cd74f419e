#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>

namespace riskbounds::detail {

/// P(Z <= x) for Z ~ N(0, 1).
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// P(Z >= x). Computed directly from erfc so the far upper tail keeps full
/// relative accuracy (1 - norm_cdf would round to 0 already near x = 8).
inline double norm_cdf_complement(double x) {
    return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

/// Standard normal density.
inline double norm_pdf(double x) {
    constexpr double inv_sqrt_2pi = 0.39894228040143267793994605993438;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Inverse of norm_cdf_complement: the z with P(Z >= z) = q, q in (0, 1).
/// Going through erfc_inv keeps tail quantiles (tiny q) fully accurate.
inline double norm_upper_quantile(double q) {
    return boost::math::erfc_inv(2.0 * q) * std::numbers::sqrt2;
}

inline double norm_quantile(double p) {
    return -norm_upper_quantile(p);
}

} // namespace riskbounds::detail
