#pragma once

#include <optional>
#include <vector>

namespace mixdyn {

/// One step of a piecewise-constant curve: `level` holds up to `end` (years).
struct CurvePiece {
    double end;
    double level;
};

/// Right-open piecewise-constant time function with an optional common
/// regularization level on [0, epsilon].
///
/// The last piece extends indefinitely. With regularization set, the curve
/// reports `common_level` for t <= epsilon and the original pieces after
/// that, so the function jumps at epsilon.
class PiecewiseConstant {
public:
    PiecewiseConstant() = default;
    static PiecewiseConstant constant(double level);
    static PiecewiseConstant steps(std::vector<CurvePiece> pieces);

    /// Copy that takes `common_level` on [0, epsilon].
    PiecewiseConstant regularized(double epsilon, double common_level) const;

    double value(double t) const;
    /// Value just after epsilon, ignoring the regularization.
    double raw_value(double t) const;

    /// \int_0^t value(s) ds
    double integral(double t) const;
    /// \int_0^t value(s)^2 ds
    double integral_of_square(double t) const;

    double epsilon() const noexcept { return epsilon_; }
    std::optional<double> common_level() const noexcept { return common_; }
    const std::vector<CurvePiece>& pieces() const noexcept { return pieces_; }
    bool is_constant() const noexcept { return pieces_.size() == 1; }

    double min_level() const;
    double max_level() const;

private:
    template <class F>
    double integrate(double t, F&& g) const;

    std::vector<CurvePiece> pieces_;  // last end is +inf
    double epsilon_ = 0.0;
    std::optional<double> common_;
};

/// Volatility curve nu(t) (1/sqrt(years)). Levels must stay above a floor
/// L > 0 so that the mixture diffusion coefficient is bounded away from zero.
class VolCurve {
public:
    static constexpr double kMinLevel = 1e-6;

    VolCurve() = default;
    static VolCurve constant(double level);
    static VolCurve piecewise(std::vector<CurvePiece> pieces);

    VolCurve regularized(double epsilon, double common_level) const;

    double level(double t) const { return curve_.value(t); }
    double raw_level(double t) const { return curve_.raw_value(t); }
    double variance_rate(double t) const {
        const double v = level(t);
        return v * v;
    }

    /// V(t)^2 = \int_0^t nu(s)^2 ds, exact for the step function.
    double integrated_variance(double t) const;
    /// \int_a^b nu(s)^2 ds
    double integrated_variance(double a, double b) const;

    double epsilon() const noexcept { return curve_.epsilon(); }
    const PiecewiseConstant& curve() const noexcept { return curve_; }
    double min_level() const { return curve_.min_level(); }
    double max_level() const { return curve_.max_level(); }

private:
    explicit VolCurve(PiecewiseConstant c);
    PiecewiseConstant curve_;
};

}  // namespace mixdyn
