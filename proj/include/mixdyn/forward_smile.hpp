#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mixdyn/local_vol.hpp"
#include "mixdyn/pricing.hpp"
#include "mixdyn/simulation.hpp"

namespace mixdyn {

/// local_vol: Monte Carlo of the mixture diffusion restarted at (t, S_bar_t);
/// closed form at t = 0.
/// uncertain_vol: closed form, scenario GBM prices weighted by the
/// posterior Lambda_k(t, S_bar_t).
enum class SmileEngine { local_vol, uncertain_vol };

struct ForwardSmileRequest {
    double t = 0.0;
    double maturity = 1.0;
    /// Strikes as multiples of S_bar_t.
    std::vector<double> moneyness;
    /// Paths, step, seed, scheme and threads; start and horizon are set from t and maturity.
    SimConfig sim;
    SmileEngine engine = SmileEngine::local_vol;
};

struct ForwardSmileCell {
    double moneyness;
    double strike;
    /// Annualized V(t, T, K) / sqrt(T - t); empty when the price could not be inverted.
    std::optional<double> implied_vol;
    double call_price;
    /// Standard error of the call price (0 for closed forms).
    double std_error;
    std::string failure;
};

struct ForwardSmileRow {
    double t;
    double maturity;
    double spot;
    std::vector<ForwardSmileCell> cells;
    std::size_t n_paths = 0;

    /// Successfully inverted cells as smile points.
    std::vector<SmilePoint> points() const;
};

/// S_bar_t = E_0(S_t) = s0 e^{R_d(t) - R_f(t)}.
double expected_spot(const LocalVolModel& model, double t);

/// Smile K -> V(t, T, K) of calls priced conditional on S_t = S_bar_t. The
/// Monte Carlo engine prices every strike from one shared ensemble, on the
/// out-of-the-money side (puts plus parity below the conditional forward).
ForwardSmileRow conditional_future_smile(const LocalVolModel& model, const ForwardSmileRequest& request);

/// Smile at t conditional on S_t = S_bar_t and on the scenario being k:
/// a GBM with vol curve nu_k, hence flat at the annualized nu_k over (t, T).
ForwardSmileRow known_scenario_smile(const LocalVolModel& model, std::size_t k, double t, double maturity,
                                     const std::vector<double>& moneyness);

/// Per-row max - min of the inverted vols.
std::vector<double> smile_flattening_metric(const std::vector<std::vector<SmilePoint>>& rows);

}  // namespace mixdyn
