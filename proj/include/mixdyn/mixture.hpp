#pragma once

#include <span>
#include <vector>

#include "mixdyn/vol_curve.hpp"
#include "mixdyn/yield_curve.hpp"

namespace mixdyn {

inline constexpr double kDefaultEpsilon = 1e-4;
/// Times below this are treated as t = 0, where the marginal law is a point mass.
inline constexpr double kPointMassTime = 1e-12;

/// normal: components N(m_i(t), v_i(t)^2) on the whole line.
/// lognormal: components are geometric Brownian motions sharing the drift of
/// the curve, supported on the positive half-line.
enum class MixtureMode { normal, lognormal };

/// Instrumental arithmetic Brownian motion dX = mu(t) dt + sigma(t) dW.
struct GaussianComponent {
    PiecewiseConstant drift;
    VolCurve vol;

    double mean(double t) const { return drift.integral(t); }
    double variance(double t) const { return vol.integrated_variance(t); }
};

/// Gaussian kernel of one component at a fixed time, expressed in the kernel
/// coordinate (y in normal mode, ln y in lognormal mode), together with the
/// time derivatives of its two parameters.
struct KernelMoments {
    double mean;
    double variance;
    double mean_rate;
    double variance_rate;
};

/// Mixture weights lambda and component curves; the full model parameterization.
class MixtureSpec {
public:
    static MixtureSpec lognormal(std::vector<double> weights, std::vector<VolCurve> vols, double s0,
                                 double epsilon = kDefaultEpsilon);
    static MixtureSpec normal(std::vector<double> weights, std::vector<GaussianComponent> components,
                              double s0 = 0.0, double epsilon = kDefaultEpsilon);

    MixtureMode mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }
    double weight(std::size_t i) const { return weights_.at(i); }
    const std::vector<GaussianComponent>& components() const noexcept { return components_; }
    const VolCurve& vol(std::size_t i) const { return components_.at(i).vol; }
    double s0() const noexcept { return s0_; }
    double epsilon() const noexcept { return epsilon_; }

    /// Common level shared by all vol curves on [0, epsilon]:
    /// sqrt(sum_i lambda_i nu_i(eps+)^2).
    double common_vol() const noexcept { return common_vol_; }

    bool in_support(double y) const noexcept {
        return mode_ == MixtureMode::normal || y > 0.0;
    }

    /// Map a level onto the kernel coordinate (identity or log).
    double kernel_coordinate(double y) const;

    void moments(const YieldCurve& curve, double t, std::span<KernelMoments> out) const;
    std::vector<KernelMoments> moments(const YieldCurve& curve, double t) const;

    /// Per-component instantaneous variance rate nu_i(t)^2 (or sigma_i(t)^2).
    double variance_rate(std::size_t i, double t) const { return vol(i).variance_rate(t); }
    /// Per-component drift mu_i(t) in normal mode.
    double drift_rate(std::size_t i, double t) const { return components_.at(i).drift.value(t); }

private:
    MixtureSpec() = default;
    void validate_and_regularize();

    MixtureMode mode_ = MixtureMode::lognormal;
    std::vector<double> weights_;
    std::vector<GaussianComponent> components_;
    double s0_ = 0.0;
    double epsilon_ = kDefaultEpsilon;
    double common_vol_ = 0.0;
};

/// Marginal density sum_i lambda_i p_i(t, y) in level units.
double mixture_density(const MixtureSpec& spec, const YieldCurve& curve, double t, double y);

/// Marginal CDF at level y.
double mixture_cdf(const MixtureSpec& spec, const YieldCurve& curve, double t, double y);

/// State-dependent weights Lambda_i(t, y) = lambda_i p_i / sum_j lambda_j p_j,
/// evaluated with a max shift in log-density space. For t <= epsilon the
/// result is exactly lambda.
void lambda_weights(const MixtureSpec& spec, const YieldCurve& curve, double t, double y,
                    std::span<double> out);
std::vector<double> lambda_weights(const MixtureSpec& spec, const YieldCurve& curve, double t, double y);

}  // namespace mixdyn
