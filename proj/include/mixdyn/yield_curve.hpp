#pragma once

#include <span>
#include <vector>

namespace mixdyn {

enum class Leg { domestic, foreign };

/// Discount factors of one pillar, in years (ACT/365 fractions).
struct CurvePillar {
    double maturity;
    double domestic_df;
    double foreign_df;
};

/// Deterministic domestic and foreign discount curves.
///
/// Log-discount factors are interpolated linearly between pillars, so the
/// instantaneous forward rate is constant on each interval. Queries past the
/// last pillar throw ExtrapolationError; there is no flat extrapolation.
class YieldCurve {
public:
    explicit YieldCurve(std::vector<CurvePillar> pillars);

    /// Constant domestic/foreign short rates out to `last_maturity`.
    static YieldCurve flat(double domestic_rate, double foreign_rate, double last_maturity = 100.0);

    std::span<const CurvePillar> pillars() const noexcept { return pillars_; }
    double last_maturity() const noexcept { return pillars_.back().maturity; }

    double discount(double t, Leg leg) const;

    /// R(a, t) = \int_a^t r(s) ds = -ln(df(t) / df(a)).
    double integrated_rate(double a, double t, Leg leg) const;

    /// Instantaneous short rate on the interval containing t (right-continuous).
    double short_rate(double t, Leg leg) const;

    /// Integrated carry R_d(a, t) - R_f(a, t), the risk-neutral log-drift of an FX rate.
    double integrated_carry(double a, double t) const;

    /// Instantaneous carry r_d(t) - r_f(t).
    double carry_rate(double t) const;

private:
    double log_discount(double t, Leg leg) const;
    std::size_t interval(double t) const;

    std::vector<CurvePillar> pillars_;
    std::vector<double> times_;        // 0 followed by pillar maturities
    std::vector<double> log_dom_;      // ln df_d at times_
    std::vector<double> log_for_;      // ln df_f at times_
};

}  // namespace mixdyn
