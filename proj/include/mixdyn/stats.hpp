#pragma once

#include <functional>
#include <span>

namespace mixdyn::stats {

struct MeanEstimate {
    double mean;
    double std_error;
};

MeanEstimate mean(std::span<const double> x);

/// Sample covariance with the standard error of its influence function.
MeanEstimate covariance(std::span<const double> x, std::span<const double> y);

struct CorrelationEstimate {
    double estimate;
    double std_error;
};

/// Pearson correlation with the asymptotic (non-Gaussian) delta-method
/// standard error Var(a b - rho (a^2 + b^2) / 2) / n on standardized a, b.
/// Throws DegenerateError when either sample has zero variance.
CorrelationEstimate correlation(std::span<const double> x, std::span<const double> y);

struct KsResult {
    double statistic;
    double p_value;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF. The
/// p-value uses the asymptotic Kolmogorov distribution with Stephens'
/// small-sample correction.
KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

/// Silverman's rule-of-thumb bandwidth 0.9 min(sd, IQR / 1.34) n^{-1/5}.
double silverman_bandwidth(std::span<const double> x);

}  // namespace mixdyn::stats
