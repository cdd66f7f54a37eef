#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixdyn/errors.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/pricing.hpp"
#include "mixdyn/yield_curve.hpp"

namespace mixdyn {

enum class LossSpace { implied_vol, price };

/// Time-0 smile quotes and the search space for a lognormal mixture with
/// constant component vols.
struct CalibrationProblem {
    /// Market smile; every point must have t = 0. implied_vol is annualized.
    std::vector<SmilePoint> quotes;
    double s0 = 1.0;
    YieldCurve curve = YieldCurve::flat(0.0, 0.0);
    std::size_t m = 2;
    double vol_min = 0.01;
    double vol_max = 2.0;
    /// Lower bound on each weight; m * weight_floor must stay below 1.
    double weight_floor = 0.0;
    LossSpace loss = LossSpace::implied_vol;
    double epsilon = kDefaultEpsilon;
    /// Strength of the pull toward equal weights, applied only when there are
    /// fewer quotes than free parameters (2m - 1).
    double tikhonov = 1e-4;
    std::size_t starts = 8;
    std::uint64_t seed = 20030210;
    int max_iterations = 400;
};

struct CalibrationResult {
    /// Components sorted by increasing vol.
    MixtureSpec spec;
    /// Sum of squared quote residuals.
    double loss_value = 0.0;
    /// Tikhonov term added to loss_value during the search (0 when unused).
    double penalty = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Model minus market, in the units of the loss space.
    std::vector<double> residuals;
    std::size_t best_start = 0;
};

/// Why a quote was rejected before optimization.
struct QuoteDiagnostic {
    std::size_t index;
    double maturity;
    double strike;
    double implied_vol;
    std::string reason;
};

class InfeasibleQuotesError : public InputError {
public:
    InfeasibleQuotesError(const std::string& what, std::vector<QuoteDiagnostic> diagnostics)
        : InputError(what), diagnostics_(std::move(diagnostics)) {}
    const std::vector<QuoteDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<QuoteDiagnostic> diagnostics_;
};

/// Checks every quote against the no-arbitrage bounds; returns the offenders.
std::vector<QuoteDiagnostic> screen_quotes(const CalibrationProblem& problem);

/// Annualized implied vols of a lognormal mixture at the problem's quotes.
std::vector<double> model_smile(const MixtureSpec& spec, const YieldCurve& curve,
                                const std::vector<SmilePoint>& quotes);

/// Levenberg-Marquardt fit of weights (softmax on the simplex) and vols
/// (logistic map into [vol_min, vol_max]) from `starts` deterministic
/// starting points, run concurrently. The Jacobian is a central finite
/// difference of the residuals. `init`, when given, is the first start.
/// Throws InfeasibleQuotesError before optimizing if any quote is unusable.
CalibrationResult calibrate(const CalibrationProblem& problem, const std::optional<MixtureSpec>& init = std::nullopt);

}  // namespace mixdyn
