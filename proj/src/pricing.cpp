#include "mixdyn/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixdyn/errors.hpp"
#include "mixdyn/normal.hpp"

namespace mixdyn {

namespace {

void check_inputs(double spot, double strike, double tau, double total_vol) {
    if (!(spot > 0.0)) throw DomainError("spot must be positive");
    if (!(strike > 0.0)) throw DomainError("strike must be positive");
    if (!(tau > 0.0)) throw DomainError("time to maturity must be positive");
    if (!(total_vol >= 0.0)) throw DomainError("total volatility must be non-negative");
}

}  // namespace

double bs_call(double spot, double strike, double tau, double rd, double rf, double total_vol) {
    check_inputs(spot, strike, tau, total_vol);
    const double fwd_leg = spot * std::exp(-rf);
    const double strike_leg = strike * std::exp(-rd);
    if (total_vol == 0.0) return std::max(fwd_leg - strike_leg, 0.0);
    const double d1 = (std::log(spot / strike) + rd - rf + 0.5 * total_vol * total_vol) / total_vol;
    const double d2 = d1 - total_vol;
    return fwd_leg * norm_cdf(d1) - strike_leg * norm_cdf(d2);
}

double bs_put(double spot, double strike, double tau, double rd, double rf, double total_vol) {
    check_inputs(spot, strike, tau, total_vol);
    const double fwd_leg = spot * std::exp(-rf);
    const double strike_leg = strike * std::exp(-rd);
    if (total_vol == 0.0) return std::max(strike_leg - fwd_leg, 0.0);
    const double d1 = (std::log(spot / strike) + rd - rf + 0.5 * total_vol * total_vol) / total_vol;
    const double d2 = d1 - total_vol;
    return strike_leg * norm_cdf(-d2) - fwd_leg * norm_cdf(-d1);
}

double bs_vega(double spot, double strike, double rd, double rf, double total_vol) {
    if (total_vol <= 0.0) return 0.0;
    const double d1 = (std::log(spot / strike) + rd - rf + 0.5 * total_vol * total_vol) / total_vol;
    return spot * std::exp(-rf) * norm_pdf(d1);
}

PriceBounds call_bounds(double spot, double strike, double rd, double rf) {
    const double fwd_leg = spot * std::exp(-rf);
    return {std::max(fwd_leg - strike * std::exp(-rd), 0.0), fwd_leg};
}

namespace {

void require_lognormal(const LocalVolModel& model) {
    if (model.mode() != MixtureMode::lognormal)
        throw UnsupportedModeError("closed-form mixture prices require a lognormal-mixture model");
}

template <class Pricer>
double mixture_price(const LocalVolModel& model, double strike, double maturity, Pricer&& price) {
    require_lognormal(model);
    if (!(maturity > 0.0)) throw DomainError("maturity must be positive");
    const auto& curve = model.curve();
    const double rd = curve.integrated_rate(0.0, maturity, Leg::domestic);
    const double rf = curve.integrated_rate(0.0, maturity, Leg::foreign);
    const auto& spec = model.spec();
    double total = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double v = std::sqrt(spec.vol(i).integrated_variance(maturity));
        total += spec.weight(i) * price(spec.s0(), strike, maturity, rd, rf, v);
    }
    return total;
}

}  // namespace

double mixture_call(const LocalVolModel& model, double strike, double maturity) {
    return mixture_price(model, strike, maturity, bs_call);
}

double mixture_put(const LocalVolModel& model, double strike, double maturity) {
    return mixture_price(model, strike, maturity, bs_put);
}

bool otm_is_put(double spot, double strike, double rd, double rf) {
    return strike * std::exp(-rd) < spot * std::exp(-rf);
}

double mixture_otm_price(const LocalVolModel& model, double strike, double maturity) {
    const auto& c = model.curve();
    const bool put = otm_is_put(model.s0(), strike, c.integrated_rate(0.0, maturity, Leg::domestic),
                                c.integrated_rate(0.0, maturity, Leg::foreign));
    return put ? mixture_put(model, strike, maturity) : mixture_call(model, strike, maturity);
}

double implied_vol(double price, double spot, double strike, double tau, double rd, double rf) {
    check_inputs(spot, strike, tau, 0.0);
    const auto bounds = call_bounds(spot, strike, rd, rf);
    if (!(price > bounds.lower))
        throw InversionError("call price " + std::to_string(price) + " at or below lower bound " +
                                 std::to_string(bounds.lower),
                             PriceBound::lower);
    if (!(price < bounds.upper))
        throw InversionError("call price " + std::to_string(price) + " at or above upper bound " +
                                 std::to_string(bounds.upper),
                             PriceBound::upper);
    // Work with the out-of-the-money option: its price is pure time value.
    const double intrinsic = otm_is_put(spot, strike, rd, rf) ? bounds.lower : 0.0;
    if (!(price - intrinsic > 0.0))
        throw InversionError("time value vanishes in double precision", PriceBound::lower);
    return implied_vol_otm(price - intrinsic, spot, strike, tau, rd, rf);
}

double implied_vol_otm(double target, double spot, double strike, double tau, double rd, double rf) {
    check_inputs(spot, strike, tau, 0.0);
    const bool use_put = otm_is_put(spot, strike, rd, rf);
    const double fwd_leg = spot * std::exp(-rf);
    const double strike_leg = strike * std::exp(-rd);
    auto value = [&](double v) {
        return use_put ? bs_put(spot, strike, tau, rd, rf, v) : bs_call(spot, strike, tau, rd, rf, v);
    };
    if (!(target > 0.0))
        throw InversionError("out-of-the-money price must be positive", PriceBound::lower);
    if (!(target < (use_put ? strike_leg : fwd_leg)))
        throw InversionError("out-of-the-money price at or above its upper bound", PriceBound::upper);

    double lo = 1e-9;
    double hi = 5.0 * std::sqrt(tau) + 5.0;
    if (value(lo) >= target)
        throw InversionError("price below the smallest representable total volatility", PriceBound::lower);
    if (value(hi) <= target)
        throw InversionError("price above the volatility bracket", PriceBound::upper);

    // Start from the at-the-money-forward approximation, clamped into the bracket.
    double v = std::clamp(std::sqrt(2.0 * std::abs(std::log(fwd_leg / strike_leg))) + 0.1, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double f = value(v) - target;
        if (f == 0.0) return v;
        if (f > 0.0)
            hi = v;
        else
            lo = v;
        const double vega = bs_vega(spot, strike, rd, rf, v);
        double next = vega > 0.0 ? v - f / vega : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - v) <= 1e-15 * std::max(1.0, v) || hi - lo <= 1e-15 * hi) return next;
        v = next;
    }
    return v;
}

double implied_density(const std::function<double(double)>& call_price, double rd, double strike, double h) {
    if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
    if (!(strike - h > 0.0)) throw DomainError("finite-difference stencil crosses zero strike");
    auto second_difference = [&](double step) {
        const double c0 = call_price(strike);
        const double up = call_price(strike + step);
        const double dn = call_price(strike - step);
        return std::pair{(up - 2.0 * c0 + dn) / (step * step), std::abs(c0)};
    };
    const auto [d_full, scale] = second_difference(h);
    const auto [d_half, unused] = second_difference(0.5 * h);
    // Rounding in the stencil is about 4 eps |C| / h^2; truncation shrinks 4x on halving.
    const double rounding = 4.0 * std::numeric_limits<double>::epsilon() * scale / (0.25 * h * h);
    const double disagreement = std::abs(d_full - d_half);
    if (rounding > 1e-3 * std::abs(d_half) || disagreement > 0.5 * std::max(std::abs(d_half), 1e-300))
        throw StepSizeError("implied_density: step " + std::to_string(h) +
                            " is dominated by rounding (Richardson disagreement " +
                            std::to_string(disagreement) + ")");
    return std::exp(rd) * d_full;
}

double implied_density(const LocalVolModel& model, double maturity, double strike, double h) {
    const double rd = model.curve().integrated_rate(0.0, maturity, Leg::domestic);
    return implied_density([&](double k) { return mixture_call(model, k, maturity); }, rd, strike, h);
}

}  // namespace mixdyn
