#include "mixdyn/vol_curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixdyn/errors.hpp"

namespace mixdyn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PiecewiseConstant PiecewiseConstant::constant(double level) {
    if (!std::isfinite(level)) throw InputError("curve level must be finite");
    PiecewiseConstant c;
    c.pieces_ = {{kInf, level}};
    return c;
}

PiecewiseConstant PiecewiseConstant::steps(std::vector<CurvePiece> pieces) {
    if (pieces.empty()) throw InputError("piecewise curve needs at least one piece");
    double prev = 0.0;
    for (const auto& p : pieces) {
        if (!(p.end > prev)) throw InputError("piece ends must be strictly increasing and positive");
        if (!std::isfinite(p.level)) throw InputError("curve level must be finite");
        prev = p.end;
    }
    pieces.back().end = kInf;
    PiecewiseConstant c;
    c.pieces_ = std::move(pieces);
    return c;
}

PiecewiseConstant PiecewiseConstant::regularized(double epsilon, double common_level) const {
    if (!(epsilon >= 0.0)) throw InputError("epsilon must be non-negative");
    PiecewiseConstant c = *this;
    c.epsilon_ = epsilon;
    c.common_ = common_level;
    return c;
}

double PiecewiseConstant::raw_value(double t) const {
    if (t < 0.0 || std::isnan(t)) throw DomainError("negative curve time " + std::to_string(t));
    for (const auto& p : pieces_)
        if (t < p.end) return p.level;
    return pieces_.back().level;
}

double PiecewiseConstant::value(double t) const {
    if (common_ && t <= epsilon_) {
        if (t < 0.0 || std::isnan(t)) throw DomainError("negative curve time " + std::to_string(t));
        return *common_;
    }
    return raw_value(t);
}

template <class F>
double PiecewiseConstant::integrate(double t, F&& g) const {
    if (t < 0.0 || std::isnan(t)) throw DomainError("negative curve time " + std::to_string(t));
    double total = 0.0;
    double start = 0.0;
    if (common_) {
        const double head = std::min(t, epsilon_);
        total += g(*common_) * head;
        start = epsilon_;
        if (t <= epsilon_) return total;
    }
    double left = 0.0;
    for (const auto& p : pieces_) {
        const double a = std::max(left, start);
        const double b = std::min(p.end, t);
        if (b > a) total += g(p.level) * (b - a);
        if (p.end >= t) break;
        left = p.end;
    }
    return total;
}

double PiecewiseConstant::integral(double t) const {
    return integrate(t, [](double x) { return x; });
}

double PiecewiseConstant::integral_of_square(double t) const {
    return integrate(t, [](double x) { return x * x; });
}

double PiecewiseConstant::min_level() const {
    double m = common_.value_or(kInf);
    for (const auto& p : pieces_) m = std::min(m, p.level);
    return m;
}

double PiecewiseConstant::max_level() const {
    double m = common_.value_or(-kInf);
    for (const auto& p : pieces_) m = std::max(m, p.level);
    return m;
}

VolCurve::VolCurve(PiecewiseConstant c) : curve_(std::move(c)) {
    if (curve_.min_level() < kMinLevel)
        throw InputError("volatility levels must be bounded away from zero (floor " +
                         std::to_string(kMinLevel) + ")");
}

VolCurve VolCurve::constant(double level) { return VolCurve(PiecewiseConstant::constant(level)); }

VolCurve VolCurve::piecewise(std::vector<CurvePiece> pieces) {
    return VolCurve(PiecewiseConstant::steps(std::move(pieces)));
}

VolCurve VolCurve::regularized(double epsilon, double common_level) const {
    return VolCurve(curve_.regularized(epsilon, common_level));
}

double VolCurve::integrated_variance(double t) const { return curve_.integral_of_square(t); }

double VolCurve::integrated_variance(double a, double b) const {
    if (a > b) throw DomainError("integrated_variance requires a <= b");
    return integrated_variance(b) - integrated_variance(a);
}

}  // namespace mixdyn
