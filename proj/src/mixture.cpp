#include "mixdyn/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mixdyn/errors.hpp"
#include "mixdyn/normal.hpp"

namespace mixdyn {

MixtureSpec MixtureSpec::lognormal(std::vector<double> weights, std::vector<VolCurve> vols, double s0,
                                   double epsilon) {
    MixtureSpec spec;
    spec.mode_ = MixtureMode::lognormal;
    spec.weights_ = std::move(weights);
    spec.s0_ = s0;
    spec.epsilon_ = epsilon;
    for (auto& v : vols) spec.components_.push_back({PiecewiseConstant::constant(0.0), std::move(v)});
    spec.validate_and_regularize();
    return spec;
}

MixtureSpec MixtureSpec::normal(std::vector<double> weights, std::vector<GaussianComponent> components,
                                double s0, double epsilon) {
    MixtureSpec spec;
    spec.mode_ = MixtureMode::normal;
    spec.weights_ = std::move(weights);
    spec.components_ = std::move(components);
    spec.s0_ = s0;
    spec.epsilon_ = epsilon;
    spec.validate_and_regularize();
    return spec;
}

void MixtureSpec::validate_and_regularize() {
    if (weights_.empty()) throw InputError("mixture needs at least one component");
    if (weights_.size() != components_.size())
        throw InputError("weights and component curves differ in length");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("mixture weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw InputError("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
    for (double& w : weights_) w /= total;
    if (!std::isfinite(s0_)) throw InputError("initial level must be finite");
    if (mode_ == MixtureMode::lognormal && !(s0_ > 0.0))
        throw InputError("lognormal mixture requires s0 > 0");
    if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) throw InputError("epsilon must be non-negative");

    // common pre-epsilon level: variance-weighted vol and lambda-averaged drift
    double var = 0.0;
    double drift = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double v = components_[i].vol.raw_level(epsilon_);
        var += weights_[i] * v * v;
        drift += weights_[i] * components_[i].drift.raw_value(epsilon_);
    }
    common_vol_ = std::sqrt(var);
    for (auto& c : components_) {
        c.vol = c.vol.regularized(epsilon_, common_vol_);
        c.drift = c.drift.regularized(epsilon_, drift);
    }
}

double MixtureSpec::kernel_coordinate(double y) const {
    if (mode_ == MixtureMode::normal) return y;
    if (!(y > 0.0)) throw DomainError("level must be positive in lognormal mode (got " + std::to_string(y) + ")");
    return std::log(y);
}

void MixtureSpec::moments(const YieldCurve& curve, double t, std::span<KernelMoments> out) const {
    if (t < 0.0 || std::isnan(t)) throw DomainError("negative time " + std::to_string(t));
    if (out.size() != size()) throw DomainError("moment buffer size mismatch");
    if (mode_ == MixtureMode::normal) {
        for (std::size_t i = 0; i < size(); ++i) {
            const auto& c = components_[i];
            out[i] = {s0_ + c.mean(t), c.variance(t), c.drift.value(t), c.vol.variance_rate(t)};
        }
        return;
    }
    const double carry = curve.integrated_carry(0.0, t);
    const double carry_rate = curve.carry_rate(t);
    const double log_s0 = std::log(s0_);
    for (std::size_t i = 0; i < size(); ++i) {
        const auto& v = components_[i].vol;
        const double var = v.integrated_variance(t);
        const double rate = v.variance_rate(t);
        out[i] = {log_s0 + carry - 0.5 * var, var, carry_rate - 0.5 * rate, rate};
    }
}

std::vector<KernelMoments> MixtureSpec::moments(const YieldCurve& curve, double t) const {
    std::vector<KernelMoments> out(size());
    moments(curve, t, out);
    return out;
}

namespace {

void require_positive_time(double t) {
    if (t < kPointMassTime)
        throw DomainError("marginal law is a point mass at t = " + std::to_string(t) + "; density undefined");
}

}  // namespace

double mixture_density(const MixtureSpec& spec, const YieldCurve& curve, double t, double y) {
    require_positive_time(t);
    const double z = spec.kernel_coordinate(y);
    const auto mom = spec.moments(curve, t);
    double density = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i)
        density += spec.weight(i) * normal_pdf(z, mom[i].mean, mom[i].variance);
    return spec.mode() == MixtureMode::lognormal ? density / y : density;
}

double mixture_cdf(const MixtureSpec& spec, const YieldCurve& curve, double t, double y) {
    require_positive_time(t);
    if (spec.mode() == MixtureMode::lognormal && y <= 0.0) return 0.0;
    const double z = spec.kernel_coordinate(y);
    const auto mom = spec.moments(curve, t);
    double cdf = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i)
        cdf += spec.weight(i) * norm_cdf((z - mom[i].mean) / std::sqrt(mom[i].variance));
    return cdf;
}

void lambda_weights(const MixtureSpec& spec, const YieldCurve& curve, double t, double y,
                    std::span<double> out) {
    if (out.size() != spec.size()) throw DomainError("weight buffer size mismatch");
    const double z = spec.kernel_coordinate(y);
    if (t < 0.0 || std::isnan(t)) throw DomainError("negative time " + std::to_string(t));
    if (t <= spec.epsilon() || t < kPointMassTime) {
        std::copy(spec.weights().begin(), spec.weights().end(), out.begin());
        return;
    }
    const auto mom = spec.moments(curve, t);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double w = spec.weight(i);
        out[i] = w > 0.0 ? std::log(w) + normal_log_pdf(z, mom[i].mean, mom[i].variance)
                         : -std::numeric_limits<double>::infinity();
        top = std::max(top, out[i]);
    }
    double total = 0.0;
    for (double& v : out) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : out) v /= total;
}

std::vector<double> lambda_weights(const MixtureSpec& spec, const YieldCurve& curve, double t, double y) {
    std::vector<double> out(spec.size());
    lambda_weights(spec, curve, t, y, out);
    return out;
}

}  // namespace mixdyn
