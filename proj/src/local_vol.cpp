#include "mixdyn/local_vol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mixdyn/errors.hpp"
#include "mixdyn/normal.hpp"
#include "mixdyn/quadrature.hpp"

namespace mixdyn {

LocalVolModel::LocalVolModel(MixtureSpec spec, YieldCurve curve)
    : spec_(std::move(spec)), curve_(std::move(curve)) {}

void LocalVolModel::require_mode(MixtureMode m, const char* op) const {
    if (spec_.mode() != m)
        throw UnsupportedModeError(std::string(op) + " requires a " +
                                   (m == MixtureMode::lognormal ? "lognormal" : "normal") + "-mixture model");
}

namespace {

/// Lambda weights plus the log-density gradient of each kernel in the kernel
/// coordinate, which is what every slope below needs.
struct WeightsAndScores {
    std::vector<double> lambda;
    std::vector<double> score;  // d/dz log p_i(z)
};

WeightsAndScores weights_and_scores(const MixtureSpec& spec, const YieldCurve& curve, double t, double y) {
    WeightsAndScores out{lambda_weights(spec, curve, t, y), std::vector<double>(spec.size(), 0.0)};
    if (t <= spec.epsilon() || t < kPointMassTime) return out;
    const double z = spec.kernel_coordinate(y);
    const auto mom = spec.moments(curve, t);
    for (std::size_t i = 0; i < spec.size(); ++i) out.score[i] = -(z - mom[i].mean) / mom[i].variance;
    return out;
}

/// d/dz of sum_i Lambda_i c_i.
double lambda_mixture_slope(const WeightsAndScores& ws, const std::vector<double>& c) {
    double mean_score = 0.0;
    double mixed = 0.0;
    double value = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        mean_score += ws.lambda[i] * ws.score[i];
        mixed += ws.lambda[i] * ws.score[i] * c[i];
        value += ws.lambda[i] * c[i];
    }
    return mixed - mean_score * value;
}

}  // namespace

double LocalVolModel::sigma_mix_squared(double t, double y) const {
    require_mode(MixtureMode::lognormal, "sigma_mix_squared");
    if (!(y > 0.0)) throw DomainError("sigma_mix_squared requires y > 0");
    std::vector<double> lambda(spec_.size());
    lambda_weights(spec_, curve_, t, y, lambda);
    double s2 = 0.0;
    for (std::size_t i = 0; i < spec_.size(); ++i) s2 += lambda[i] * spec_.variance_rate(i, t);
    return s2;
}

double LocalVolModel::sigma_mix_squared_slope(double t, double y) const {
    require_mode(MixtureMode::lognormal, "sigma_mix_squared_slope");
    if (!(y > 0.0)) throw DomainError("sigma_mix_squared_slope requires y > 0");
    const auto ws = weights_and_scores(spec_, curve_, t, y);
    std::vector<double> rates(spec_.size());
    for (std::size_t i = 0; i < spec_.size(); ++i) rates[i] = spec_.variance_rate(i, t);
    // chain rule through z = ln y
    return lambda_mixture_slope(ws, rates) / y;
}

LocalVolModel::NormalCoefficients LocalVolModel::normal_mixture_coefficients(double t, double y) const {
    require_mode(MixtureMode::normal, "normal_mixture_coefficients");
    std::vector<double> lambda(spec_.size());
    lambda_weights(spec_, curve_, t, y, lambda);
    NormalCoefficients c{0.0, 0.0};
    for (std::size_t i = 0; i < spec_.size(); ++i) {
        c.drift += lambda[i] * spec_.drift_rate(i, t);
        c.diffusion_squared += lambda[i] * spec_.variance_rate(i, t);
    }
    return c;
}

double LocalVolModel::normal_diffusion_squared_slope(double t, double y) const {
    require_mode(MixtureMode::normal, "normal_diffusion_squared_slope");
    const auto ws = weights_and_scores(spec_, curve_, t, y);
    std::vector<double> rates(spec_.size());
    for (std::size_t i = 0; i < spec_.size(); ++i) rates[i] = spec_.variance_rate(i, t);
    return lambda_mixture_slope(ws, rates);
}

LocalVolModel::LevelCoefficients LocalVolModel::exp_transform_coefficients(double t, double s) const {
    require_mode(MixtureMode::normal, "exp_transform_coefficients");
    if (!(s > 0.0)) throw DomainError("exp_transform_coefficients requires s > 0");
    const auto c = normal_mixture_coefficients(t, std::log(s));
    return {s * (c.drift + 0.5 * c.diffusion_squared), s * std::sqrt(c.diffusion_squared)};
}

double LocalVolModel::drift(double t, double y) const {
    if (spec_.mode() == MixtureMode::lognormal) return curve_.carry_rate(t) * y;
    return normal_mixture_coefficients(t, y).drift;
}

double LocalVolModel::diffusion_squared(double t, double y) const {
    if (spec_.mode() == MixtureMode::lognormal) return sigma_mix_squared(t, y) * y * y;
    return normal_mixture_coefficients(t, y).diffusion_squared;
}

namespace {

/// Mixture density and its time derivative in level coordinates.
class LevelDensity {
public:
    LevelDensity(const MixtureSpec& spec, const YieldCurve& curve, double t, TimeDerivative mode)
        : spec_(spec), curve_(curve), t_(t), mode_(mode), mom_(spec.moments(curve, t)) {
        if (mode_ == TimeDerivative::central_difference) {
            const double h = 1e-6 * std::max(t, 1.0);
            if (t - h <= spec.epsilon())
                throw DomainError("central-difference time derivative straddles the regularization window");
            step_ = h;
        }
    }

    double density(double y) const {
        if (!spec_.in_support(y)) return 0.0;
        const double z = spec_.kernel_coordinate(y);
        double p = 0.0;
        for (std::size_t i = 0; i < mom_.size(); ++i)
            p += spec_.weight(i) * normal_pdf(z, mom_[i].mean, mom_[i].variance);
        return jacobian(y) * p;
    }

    double time_derivative(double y) const {
        if (!spec_.in_support(y)) return 0.0;
        if (mode_ == TimeDerivative::central_difference)
            return (mixture_density(spec_, curve_, t_ + step_, y) - mixture_density(spec_, curve_, t_ - step_, y)) /
                   (2.0 * step_);
        const double z = spec_.kernel_coordinate(y);
        double dp = 0.0;
        for (std::size_t i = 0; i < mom_.size(); ++i) {
            const auto& m = mom_[i];
            const double d = z - m.mean;
            const double dlog = d * m.mean_rate / m.variance +
                                0.5 * m.variance_rate * (d * d / (m.variance * m.variance) - 1.0 / m.variance);
            dp += spec_.weight(i) * normal_pdf(z, m.mean, m.variance) * dlog;
        }
        return jacobian(y) * dp;
    }

    /// min_i(mean_i - 8 sd_i), mapped back to level coordinates.
    double default_lower_bound() const {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& m : mom_) lo = std::min(lo, m.mean - 8.0 * std::sqrt(m.variance));
        return spec_.mode() == MixtureMode::lognormal ? std::exp(lo) : lo;
    }

private:
    double jacobian(double y) const { return spec_.mode() == MixtureMode::lognormal ? 1.0 / y : 1.0; }

    const MixtureSpec& spec_;
    const YieldCurve& curve_;
    double t_;
    TimeDerivative mode_;
    std::vector<KernelMoments> mom_;
    double step_ = 0.0;
};

}  // namespace

double general_coefficient_oracle(const MixtureSpec& spec, const YieldCurve& curve,
                                  const std::function<double(double, double)>& drift, double t, double y,
                                  const OracleOptions& options) {
    if (t <= spec.epsilon() || t < kPointMassTime)
        throw DomainError("coefficient oracle needs t beyond the regularization window");
    if (!spec.in_support(y)) throw DomainError("oracle level outside the support");
    const LevelDensity p(spec, curve, t, options.derivative);
    const double b = std::isnan(options.lower_bound) ? p.default_lower_bound() : options.lower_bound;
    if (!(y > b)) throw DomainError("oracle level must lie above the lower bound");

    auto inner = [&](double x) {
        if (x <= b) return 0.0;
        return integrate_adaptive([&](double u) { return p.time_derivative(u); }, b, x,
                                  options.inner_abs_tol, 1e-12)
            .value;
    };
    auto integrand = [&](double x) { return inner(x) + drift(t, x) * p.density(x); };
    const auto outer = integrate_adaptive(integrand, b, y, 0.0, options.outer_tol);
    const double py = p.density(y);
    if (!(py > 0.0)) throw NumericalError("mixture density underflows at the oracle level", 0.0);
    return 2.0 * outer.value / py;
}

}  // namespace mixdyn
