#pragma once

#include <cmath>
#include <numbers>

namespace mixdyn {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;
inline constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364056176;

/// Standard normal density.
inline double norm_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF through erfc, which keeps full relative accuracy in
/// the lower tail.
inline double norm_cdf(double x) noexcept {
    // Rounding in x / sqrt(2) is amplified by ~2x^2 in the tails; the
    // first-order correction below restores near-ulp accuracy.
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt2_lo = -4.8336466567264565e-17;
    const double t = -x * inv_sqrt2;
    const double dt = std::fma(-x, inv_sqrt2, -t) - x * inv_sqrt2_lo;
    return 0.5 * (std::erfc(t) - std::numbers::inv_sqrtpi * 2.0 * std::exp(-t * t) * dt);
}

/// Log density of N(mean, variance) at x.
inline double normal_log_pdf(double x, double mean, double variance) noexcept {
    const double d = x - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

inline double normal_pdf(double x, double mean, double variance) noexcept {
    return std::exp(normal_log_pdf(x, mean, variance));
}

/// Inverse of the standard normal CDF (Wichura, AS241 PPND16).
/// Relative accuracy about 1e-16 on (0, 1); returns -inf/+inf at 0/1.
double inverse_norm_cdf(double p) noexcept;

}  // namespace mixdyn
