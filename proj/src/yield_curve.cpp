#include "mixdyn/yield_curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixdyn/errors.hpp"

namespace mixdyn {

YieldCurve::YieldCurve(std::vector<CurvePillar> pillars) : pillars_(std::move(pillars)) {
    if (pillars_.empty()) throw InputError("yield curve needs at least one pillar");
    times_.push_back(0.0);
    log_dom_.push_back(0.0);
    log_for_.push_back(0.0);
    for (const auto& p : pillars_) {
        if (!(p.maturity > times_.back()))
            throw InputError("curve pillars must be strictly increasing and start above 0 (maturity " +
                             std::to_string(p.maturity) + ")");
        for (double df : {p.domestic_df, p.foreign_df}) {
            if (!(df > 0.0 && df <= 1.0) || !std::isfinite(df))
                throw InputError("discount factor outside (0, 1] at maturity " +
                                 std::to_string(p.maturity));
        }
        times_.push_back(p.maturity);
        log_dom_.push_back(std::log(p.domestic_df));
        log_for_.push_back(std::log(p.foreign_df));
    }
}

YieldCurve YieldCurve::flat(double domestic_rate, double foreign_rate, double last_maturity) {
    if (domestic_rate < 0.0 || foreign_rate < 0.0)
        throw InputError("flat curve constructor requires non-negative rates so that df <= 1");
    return YieldCurve({{last_maturity, std::exp(-domestic_rate * last_maturity),
                        std::exp(-foreign_rate * last_maturity)}});
}

std::size_t YieldCurve::interval(double t) const {
    if (t < 0.0 || std::isnan(t)) throw DomainError("negative curve time " + std::to_string(t));
    if (t > times_.back())
        throw ExtrapolationError("time " + std::to_string(t) + " beyond last curve pillar " +
                                 std::to_string(times_.back()));
    // index i with times_[i] <= t < times_[i+1]; the last pillar maps onto the last interval
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    auto i = static_cast<std::size_t>(std::distance(times_.begin(), it));
    return std::min(i, times_.size() - 1) - 1;
}

double YieldCurve::log_discount(double t, Leg leg) const {
    const auto& lg = leg == Leg::domestic ? log_dom_ : log_for_;
    const std::size_t i = interval(t);
    const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
    if (w == 0.0) return lg[i];
    if (w == 1.0) return lg[i + 1];
    return lg[i] + w * (lg[i + 1] - lg[i]);
}

double YieldCurve::discount(double t, Leg leg) const { return std::exp(log_discount(t, leg)); }

double YieldCurve::integrated_rate(double a, double t, Leg leg) const {
    if (a > t) throw DomainError("integrated_rate requires a <= t");
    if (a == t) {
        interval(t);
        return 0.0;
    }
    return log_discount(a, leg) - log_discount(t, leg);
}

double YieldCurve::short_rate(double t, Leg leg) const {
    const auto& lg = leg == Leg::domestic ? log_dom_ : log_for_;
    const std::size_t i = interval(t);
    return -(lg[i + 1] - lg[i]) / (times_[i + 1] - times_[i]);
}

double YieldCurve::integrated_carry(double a, double t) const {
    return integrated_rate(a, t, Leg::domestic) - integrated_rate(a, t, Leg::foreign);
}

double YieldCurve::carry_rate(double t) const {
    return short_rate(t, Leg::domestic) - short_rate(t, Leg::foreign);
}

}  // namespace mixdyn
