#pragma once

#include <functional>
#include <limits>

#include "mixdyn/mixture.hpp"
#include "mixdyn/yield_curve.hpp"

namespace mixdyn {

/// Mixture spec plus curve: the diffusion whose marginal law follows the
/// prescribed mixture. Immutable; safe to share across threads.
class LocalVolModel {
public:
    LocalVolModel(MixtureSpec spec, YieldCurve curve);

    const MixtureSpec& spec() const noexcept { return spec_; }
    const YieldCurve& curve() const noexcept { return curve_; }
    MixtureMode mode() const noexcept { return spec_.mode(); }
    double s0() const noexcept { return spec_.s0(); }

    /// sigma_mix^2(t, y) = sum_i Lambda_i(t, y) nu_i(t)^2 (lognormal mode).
    double sigma_mix_squared(double t, double y) const;

    /// d sigma_mix^2 / dy, analytic.
    double sigma_mix_squared_slope(double t, double y) const;

    /// Lambda-mixtures of the component drifts and variance rates (normal mode).
    struct NormalCoefficients {
        double drift;
        double diffusion_squared;
    };
    NormalCoefficients normal_mixture_coefficients(double t, double y) const;

    /// d sigma_f^2 / dy for the normal-mixture diffusion, analytic.
    double normal_diffusion_squared_slope(double t, double y) const;

    /// Ito coefficients of S = exp(Y) for the normal-mixture Y:
    /// drift s (f + sigma_f^2 / 2), diffusion s sigma_f, both evaluated at ln s.
    struct LevelCoefficients {
        double drift;
        double diffusion;
    };
    LevelCoefficients exp_transform_coefficients(double t, double s) const;

    /// Drift of the level process: r(t) y (lognormal) or f_t(y) (normal).
    double drift(double t, double y) const;
    /// Squared diffusion of the level process: sigma_mix^2 y^2 or sigma_f^2.
    double diffusion_squared(double t, double y) const;

private:
    void require_mode(MixtureMode m, const char* op) const;

    MixtureSpec spec_;
    YieldCurve curve_;
};

enum class TimeDerivative { analytic, central_difference };

struct OracleOptions {
    /// Lower integration limit. NaN selects min_i(mean_i - 8 sd_i) in the
    /// kernel coordinate (0 is the natural bound in lognormal mode, but the
    /// density vanishes well before).
    double lower_bound = std::numeric_limits<double>::quiet_NaN();
    double inner_abs_tol = 1e-10;
    double outer_tol = 1e-8;
    TimeDerivative derivative = TimeDerivative::analytic;
};

/// Squared diffusion coefficient that makes the SDE with drift `drift` track
/// the mixture density of `spec`, obtained by integrating the Fokker-Planck
/// equation twice from the lower support bound:
///
///   sigma^2(y) = 2 / p(y) [ \int_b^y \int_b^x dp/dt(u) du dx + \int_b^y f(x) p(x) dx ]
///
/// Evaluated by nested adaptive quadrature in level coordinates. Independent
/// of the closed-form Lambda expressions, so it serves as their oracle.
/// Throws NumericalError when a quadrature misses its tolerance.
double general_coefficient_oracle(const MixtureSpec& spec, const YieldCurve& curve,
                                  const std::function<double(double t, double y)>& drift, double t,
                                  double y, const OracleOptions& options = {});

}  // namespace mixdyn
