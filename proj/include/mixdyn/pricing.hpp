#pragma once

#include <functional>

#include "mixdyn/local_vol.hpp"

namespace mixdyn {

/// Market or model call quote.
struct OptionQuote {
    double maturity;
    double strike;
    double price;
};

/// One point of an implied-volatility smile. `implied_vol` is annualized:
/// V(t, T, K) / sqrt(T - t).
struct SmilePoint {
    double t;
    double maturity;
    double strike;
    double implied_vol;
};

/// Black-Scholes call with carry. `total_vol` is the standard deviation of
/// ln S over the period (not annualized); Rd and Rf are integrated domestic
/// and foreign rates over the same period. total_vol = 0 gives the
/// discounted intrinsic value.
double bs_call(double spot, double strike, double tau, double rd, double rf, double total_vol);
double bs_put(double spot, double strike, double tau, double rd, double rf, double total_vol);

/// d price / d total_vol
double bs_vega(double spot, double strike, double rd, double rf, double total_vol);

/// No-arbitrage bounds [max(s e^-Rf - K e^-Rd, 0), s e^-Rf] for a call.
struct PriceBounds {
    double lower;
    double upper;
};
PriceBounds call_bounds(double spot, double strike, double rd, double rf);

/// Sum_i lambda_i BSCall(s0, K, T, R_d(T), R_f(T), V_i(T)).
double mixture_call(const LocalVolModel& model, double strike, double maturity);
double mixture_put(const LocalVolModel& model, double strike, double maturity);

/// Total implied volatility V with bs_call(V) = price. The inversion runs on
/// the out-of-the-money side (puts below the forward) and uses a
/// bisection-safeguarded Newton iteration on [1e-9, 5 sqrt(tau) + 5].
/// Throws InversionError when the price is at or outside a bound.
double implied_vol(double price, double spot, double strike, double tau, double rd, double rf);

/// True when the out-of-the-money option at this strike is the put
/// (K e^-Rd < s e^-Rf).
bool otm_is_put(double spot, double strike, double rd, double rf);

/// Same inversion from the out-of-the-money price itself (put below the
/// forward, call at or above). Deep in-the-money calls keep their time value
/// only in the last digits, so smiles should be inverted through this entry.
double implied_vol_otm(double otm_price, double spot, double strike, double tau, double rd, double rf);

/// Mixture price of the out-of-the-money option at `strike`.
double mixture_otm_price(const LocalVolModel& model, double strike, double maturity);

/// Risk-neutral density at K from the second strike derivative of a call
/// price function: e^{R_d(T)} d^2C/dK^2, by central differences with step h.
/// A Richardson comparison against step h/2 detects steps so small that
/// rounding dominates; that case throws StepSizeError.
double implied_density(const std::function<double(double)>& call_price, double rd, double strike,
                       double h);
double implied_density(const LocalVolModel& model, double maturity, double strike, double h);

}  // namespace mixdyn
