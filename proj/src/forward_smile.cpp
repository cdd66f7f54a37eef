#include "mixdyn/forward_smile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixdyn/errors.hpp"

namespace mixdyn {

namespace {

struct Leg2 {
    double rd;
    double rf;
};

Leg2 rates(const LocalVolModel& model, double t, double maturity) {
    return {model.curve().integrated_rate(t, maturity, Leg::domestic),
            model.curve().integrated_rate(t, maturity, Leg::foreign)};
}

void validate_request(const LocalVolModel& model, const ForwardSmileRequest& r) {
    if (model.mode() != MixtureMode::lognormal)
        throw UnsupportedModeError("forward smiles require a lognormal-mixture model");
    if (!(r.t >= 0.0) || !(r.maturity > r.t)) throw DomainError("forward smile needs 0 <= t < T");
    if (r.moneyness.empty()) throw InputError("empty moneyness grid");
    for (double k : r.moneyness)
        if (!(k > 0.0)) throw InputError("moneyness values must be positive");
}

/// Fills implied_vol or failure from the out-of-the-money price.
void invert_cell(ForwardSmileCell& c, double otm_price, double spot, double tau, const Leg2& r) {
    try {
        c.implied_vol = implied_vol_otm(otm_price, spot, c.strike, tau, r.rd, r.rf) / std::sqrt(tau);
    } catch (const InversionError& e) {
        c.failure = e.what();
    }
}

ForwardSmileRow closed_form_row(const ForwardSmileRequest& req, double spot,
                                const std::vector<double>& weights, const std::vector<double>& total_vols,
                                const Leg2& r) {
    ForwardSmileRow row{req.t, req.maturity, spot, {}, 0};
    const double tau = req.maturity - req.t;
    for (double mny : req.moneyness) {
        ForwardSmileCell c{mny, mny * spot, std::nullopt, 0.0, 0.0, {}};
        const bool put_side = otm_is_put(spot, c.strike, r.rd, r.rf);
        double otm = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            c.call_price += weights[k] * bs_call(spot, c.strike, tau, r.rd, r.rf, total_vols[k]);
            otm += weights[k] * (put_side ? bs_put : bs_call)(spot, c.strike, tau, r.rd, r.rf, total_vols[k]);
        }
        invert_cell(c, otm, spot, tau, r);
        row.cells.push_back(std::move(c));
    }
    return row;
}

ForwardSmileRow monte_carlo_row(const LocalVolModel& model, const ForwardSmileRequest& req, double spot,
                                const Leg2& r) {
    SimConfig cfg = req.sim;
    cfg.t_start = req.t;
    cfg.s_start = spot;
    cfg.horizon = req.maturity;
    cfg.record_every = 0;
    const auto ens = simulate_local_vol(model, cfg);
    const auto st = ens.terminal();

    ForwardSmileRow row{req.t, req.maturity, spot, {}, ens.n_paths};
    const double tau = req.maturity - req.t;
    const double df_d = std::exp(-r.rd);
    const double df_f = std::exp(-r.rf);
    for (double mny : req.moneyness) {
        ForwardSmileCell c{mny, mny * spot, std::nullopt, 0.0, 0.0, {}};
        const bool put_side = otm_is_put(spot, c.strike, r.rd, r.rf);
        const double k = c.strike;
        const auto est = put_side ? mc_price(ens, req.maturity, [k](double s) { return std::max(k - s, 0.0); }, df_d)
                                  : mc_price(ens, req.maturity, [k](double s) { return std::max(s - k, 0.0); }, df_d);
        c.std_error = est.std_error;
        c.call_price = put_side ? est.price + spot * df_f - k * df_d : est.price;
        // the out-of-the-money price has lower bound 0; within one SE of it the vol is unresolved
        if (!(est.price > est.std_error)) {
            std::ostringstream msg;
            msg << "out-of-the-money price " << est.price << " within one standard error (" << est.std_error
                << ") of zero";
            c.failure = msg.str();
        } else {
            invert_cell(c, est.price, spot, tau, r);
        }
        row.cells.push_back(std::move(c));
    }
    return row;
}

}  // namespace

std::vector<SmilePoint> ForwardSmileRow::points() const {
    std::vector<SmilePoint> out;
    for (const auto& c : cells)
        if (c.implied_vol) out.push_back({t, maturity, c.strike, *c.implied_vol});
    return out;
}

double expected_spot(const LocalVolModel& model, double t) {
    if (!(t >= 0.0)) throw DomainError("expected_spot needs t >= 0");
    if (t == 0.0) return model.s0();
    return model.s0() * std::exp(model.curve().integrated_carry(0.0, t));
}

ForwardSmileRow conditional_future_smile(const LocalVolModel& model, const ForwardSmileRequest& request) {
    validate_request(model, request);
    const double spot = expected_spot(model, request.t);
    const auto r = rates(model, request.t, request.maturity);
    const auto& spec = model.spec();

    if (request.engine == SmileEngine::uncertain_vol || request.t == 0.0) {
        // at t = 0 both engines share the closed-form mixture price
        std::vector<double> weights = request.t == 0.0
                                          ? std::vector<double>(spec.weights().begin(), spec.weights().end())
                                          : lambda_weights(spec, model.curve(), request.t, spot);
        std::vector<double> vols;
        for (std::size_t k = 0; k < spec.size(); ++k)
            vols.push_back(std::sqrt(spec.vol(k).integrated_variance(request.t, request.maturity)));
        return closed_form_row(request, spot, weights, vols, r);
    }
    return monte_carlo_row(model, request, spot, r);
}

ForwardSmileRow known_scenario_smile(const LocalVolModel& model, std::size_t k, double t, double maturity,
                                     const std::vector<double>& moneyness) {
    ForwardSmileRequest req;
    req.t = t;
    req.maturity = maturity;
    req.moneyness = moneyness;
    validate_request(model, req);
    if (k >= model.spec().size()) throw DomainError("scenario index out of range");
    const double spot = expected_spot(model, t);
    const double v = std::sqrt(model.spec().vol(k).integrated_variance(t, maturity));
    return closed_form_row(req, spot, {1.0}, {v}, rates(model, t, maturity));
}

std::vector<double> smile_flattening_metric(const std::vector<std::vector<SmilePoint>>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.empty()) {
            out.push_back(0.0);
            continue;
        }
        const auto [lo, hi] = std::minmax_element(row.begin(), row.end(), [](const auto& a, const auto& b) {
            return a.implied_vol < b.implied_vol;
        });
        out.push_back(hi->implied_vol - lo->implied_vol);
    }
    return out;
}

}  // namespace mixdyn
