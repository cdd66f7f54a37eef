#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "mixdyn/local_vol.hpp"
#include "mixdyn/simulation.hpp"
#include "mixdyn/stats.hpp"

namespace mixdyn {

/// Sample correlation between two time-T functionals of a simulated process.
struct CorrelationReport {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    /// Exact covariance implied by the model, when known.
    std::optional<double> analytic_cov;

    /// |estimate| within `k` standard errors of zero.
    bool consistent_with_zero(double k = 3.0) const { return std::abs(estimate) <= k * std_error; }
};

/// cov(Y_t, sigma_f(t, Y_t)^2) for the normal-mixture diffusion:
/// sum_i lambda_i m_i sigma_i^2 - (sum_i lambda_i m_i)(sum_i lambda_i sigma_i^2),
/// with m_i the component means (s0 + \int mu_i).
double normal_mixture_covariance(const MixtureSpec& spec, double t);

struct SpotVolReport {
    CorrelationReport correlation;
    /// Sample mean of sigma_mix^2(T, S_T) S_T and its analytic value
    /// s0 e^{R(T)} sum_i lambda_i nu_i(T)^2.
    stats::MeanEstimate sigma_spot;
    double sigma_spot_analytic = 0.0;
    /// Sample mean of sigma_mix^2(T, S_T) and its analytic value sum_i lambda_i nu_i(T)^2.
    stats::MeanEstimate sigma;
    double sigma_analytic = 0.0;
};

/// corr(S_T, sigma_mix^2(T, S_T)) over the terminal slice of `ensemble`.
/// Throws DegenerateError for single-component models.
SpotVolReport terminal_corr_spot_vol(const PathEnsemble& ensemble, const LocalVolModel& model, double maturity);

/// corr(S_T, v(T)) with v(T) the accumulated squared percentage volatility.
/// Works for local-vol and uncertain-vol ensembles alike.
CorrelationReport terminal_corr_avg_variance(const PathEnsemble& ensemble, double maturity);

struct InstantaneousCorrelation {
    bool defined = false;
    /// sign(d sigma^2 / dy): the limit correlation between dS and d sigma^2.
    double value = 0.0;
    double slope = 0.0;
};

/// Limit correlation between the increments of the level and of its squared
/// diffusion coefficient. Both are driven by the same Brownian increment, so
/// the value is +-1 wherever the slope is nonzero and undefined otherwise.
InstantaneousCorrelation instantaneous_corr_check(const LocalVolModel& model, double t, double y);

struct PosteriorCheck {
    /// Q{xi = nu_k | S_t = x} from Bayes' formula on the lognormal scenario densities.
    std::vector<double> posterior;
    /// Lambda_k(t, x) from the local-vol weights.
    std::vector<double> lambda;
    /// E{xi(t)^2 | S_t = x} = sum_k posterior_k nu_k(t)^2.
    double conditional_variance = 0.0;
    double sigma_mix_squared = 0.0;
    double max_weight_gap = 0.0;
    double variance_gap = 0.0;
};

PosteriorCheck posterior_weights_check(const LocalVolModel& model, double t, double x);

struct BinnedPosterior {
    double center = 0.0;
    double bandwidth = 0.0;
    std::size_t in_bin = 0;
    /// Label frequencies among paths with |S_t - x| < bandwidth, their
    /// binomial standard errors, and the bin average of Lambda_k(t, S_t).
    std::vector<double> frequency;
    std::vector<double> std_error;
    std::vector<double> lambda_bin_mean;
    std::vector<double> lambda_at_center;

    bool consistent(double k = 3.0) const;
};

/// Kernel-binned posterior label frequencies from an uncertain-vol ensemble
/// at recorded time index `time_index`. Bandwidth defaults to Silverman's rule.
BinnedPosterior binned_posterior(const PathEnsemble& ensemble, std::size_t time_index, const LocalVolModel& model,
                                 double x, std::optional<double> bandwidth = std::nullopt);

/// Moments of the terminal law computed by quadrature against the closed-form
/// mixture density: E{sigma_mix^2 S}, E{sigma_mix^2}, E{S}.
struct SpotVolMoments {
    double sigma_spot = 0.0;
    double sigma = 0.0;
    double spot = 0.0;
    double covariance() const { return sigma_spot - sigma * spot; }
};
SpotVolMoments spot_vol_moments_by_quadrature(const LocalVolModel& model, double maturity);

/// E{v(T) S_T} from the ODE C' = r C + A, A_u = E{sigma_mix^2(u, S_u) S_u},
/// i.e. C_T = e^{R(T)} \int_0^T e^{-R(u)} A_u du, by quadrature; together
/// with E{v(T)} and E{S_T}.
struct AverageVarianceMoments {
    double variance_spot = 0.0;
    double variance = 0.0;
    double spot = 0.0;
    double covariance() const { return variance_spot - variance * spot; }
};
AverageVarianceMoments average_variance_moments(const LocalVolModel& model, double maturity);

/// Uniform grid in x = ln S with n cell centres on [x_min, x_max].
struct FokkerPlanckGrid {
    double x_min;
    double x_max;
    std::size_t n;
    double spacing() const { return (x_max - x_min) / static_cast<double>(n); }
    double center(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * spacing(); }
};

/// Grid covering all but ~1e-8 of the mixture mass at every time up to t_end.
FokkerPlanckGrid default_fokker_planck_grid(const LocalVolModel& model, double t_end, std::size_t n = 2000);

struct FokkerPlanckOptions {
    /// Start time; NaN selects 2 epsilon. The initial density is the mixture there.
    double t_start = std::numeric_limits<double>::quiet_NaN();
    double max_dt = 1e-3;
    double first_dt = 1e-6;
    double growth = 1.05;
    /// Implicit-Euler half steps before Crank-Nicolson (damps the initial spike).
    int rannacher_steps = 4;
};

struct FokkerPlanckResult {
    FokkerPlanckGrid grid;
    double t_end = 0.0;
    /// Cell-average density of ln S.
    std::vector<double> log_density;
    /// Density of S at the cell centres, p_S(S) = q(ln S) / S.
    std::vector<double> level_density;
    std::vector<double> levels;
    double initial_mass = 0.0;
    double final_mass = 0.0;
    std::size_t steps = 0;
};

/// Crank-Nicolson finite-volume solution of the Fokker-Planck equation of
/// ln S under the mixture diffusion, with zero-flux ends. Throws
/// NumericalError when the solution develops negative oscillations.
FokkerPlanckResult fokker_planck_evolve(const LocalVolModel& model, const FokkerPlanckGrid& grid, double t_end,
                                        const FokkerPlanckOptions& options = {});

/// L1 distance between the evolved density and the closed-form mixture
/// (both as cell averages of the ln S density).
double l1_distance_to_mixture(const FokkerPlanckResult& result, const LocalVolModel& model);

}  // namespace mixdyn
