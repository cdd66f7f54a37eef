#include "mixdyn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixdyn/errors.hpp"
#include "mixdyn/kernels.hpp"
#include "mixdyn/normal.hpp"
#include "mixdyn/quadrature.hpp"

namespace mixdyn {

namespace {

void require_horizon(const PathEnsemble& e, double maturity) {
    if (e.n_paths == 0) throw InputError("empty ensemble");
    if (std::abs(e.horizon() - maturity) > 1e-9 * std::max(1.0, maturity))
        throw DomainError("ensemble horizon " + std::to_string(e.horizon()) + " differs from T = " +
                          std::to_string(maturity));
}

void require_lognormal(const LocalVolModel& model, const char* op) {
    if (model.mode() != MixtureMode::lognormal)
        throw UnsupportedModeError(std::string(op) + " requires a lognormal-mixture model");
}

double weighted_variance_rate(const MixtureSpec& spec, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) s += spec.weight(i) * spec.variance_rate(i, t);
    return s;
}

}  // namespace

double normal_mixture_covariance(const MixtureSpec& spec, double t) {
    if (spec.mode() != MixtureMode::normal)
        throw UnsupportedModeError("normal_mixture_covariance requires a normal-mixture spec");
    if (!(t > 0.0)) throw DomainError("normal_mixture_covariance requires t > 0");
    double mean_rate = 0.0;
    double mean = 0.0;
    double rate = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double w = spec.weight(i);
        const double m = spec.s0() + spec.components()[i].mean(t);
        const double s2 = spec.variance_rate(i, t);
        mean_rate += w * m * s2;
        mean += w * m;
        rate += w * s2;
    }
    return mean_rate - mean * rate;
}

SpotVolReport terminal_corr_spot_vol(const PathEnsemble& ensemble, const LocalVolModel& model, double maturity) {
    require_lognormal(model, "terminal_corr_spot_vol");
    require_horizon(ensemble, maturity);
    const auto& spec = model.spec();
    if (spec.size() < 2)
        throw DegenerateError("sigma_mix^2 is constant for a single-component model; correlation undefined");

    const auto st = ensemble.terminal();
    std::vector<double> z(st.size());
    std::vector<double> s2(st.size());
    std::transform(st.begin(), st.end(), z.begin(), [](double s) { return std::log(s); });
    const auto slice = kernels::make_slice(spec, model.curve(), maturity);
    kernels::active_kernels().sigma_squared(slice, z.data(), s2.data(), z.size());

    std::vector<double> prod(st.size());
    for (std::size_t i = 0; i < st.size(); ++i) prod[i] = s2[i] * st[i];

    SpotVolReport r;
    const auto c = stats::correlation(st, s2);
    r.correlation = {c.estimate, c.std_error, st.size(), 0.0};
    r.sigma_spot = stats::mean(prod);
    r.sigma = stats::mean(s2);
    const double weighted = weighted_variance_rate(spec, maturity);
    r.sigma_analytic = weighted;
    r.sigma_spot_analytic = spec.s0() * std::exp(model.curve().integrated_carry(0.0, maturity)) * weighted;
    return r;
}

CorrelationReport terminal_corr_avg_variance(const PathEnsemble& ensemble, double maturity) {
    require_horizon(ensemble, maturity);
    const auto c = stats::correlation(ensemble.terminal(), ensemble.terminal_variance());
    return {c.estimate, c.std_error, ensemble.n_paths, 0.0};
}

InstantaneousCorrelation instantaneous_corr_check(const LocalVolModel& model, double t, double y) {
    InstantaneousCorrelation out;
    double level = 0.0;
    if (model.mode() == MixtureMode::lognormal) {
        out.slope = model.sigma_mix_squared_slope(t, y);
        level = model.sigma_mix_squared(t, y) / y;
    } else {
        out.slope = model.normal_diffusion_squared_slope(t, y);
        level = model.normal_mixture_coefficients(t, y).diffusion_squared;
    }
    // slope relative to the coefficient scale; below this it is rounding noise
    out.defined = std::abs(out.slope) > 1e-12 * std::abs(level);
    out.value = out.defined ? (out.slope > 0.0 ? 1.0 : -1.0) : 0.0;
    return out;
}

PosteriorCheck posterior_weights_check(const LocalVolModel& model, double t, double x) {
    require_lognormal(model, "posterior_weights_check");
    if (!(x > 0.0)) throw DomainError("posterior check requires x > 0");
    if (!(t > 0.0)) throw DomainError("posterior check requires t > 0");
    const auto& spec = model.spec();
    const auto& curve = model.curve();
    const std::size_t m = spec.size();

    // Bayes: Q{xi = k | S_t = x} = Q{S_t in dx | xi = k} lambda_k / Q{S_t in dx}
    std::vector<double> joint(m);
    const double carry = curve.integrated_carry(0.0, t);
    double evidence = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double v2 = spec.vol(k).integrated_variance(t);
        const double mean = std::log(spec.s0()) + carry - 0.5 * v2;
        const double conditional = normal_pdf(std::log(x), mean, v2) / x;
        joint[k] = spec.weight(k) * conditional;
        evidence += joint[k];
    }
    PosteriorCheck r;
    r.lambda = lambda_weights(spec, curve, t, x);
    r.posterior.resize(m);
    if (evidence > 0.0 && std::isfinite(evidence)) {
        for (std::size_t k = 0; k < m; ++k) r.posterior[k] = joint[k] / evidence;
    } else {
        // all scenario densities underflow; fall back to the log-space weights
        r.posterior = r.lambda;
    }
    for (std::size_t k = 0; k < m; ++k) {
        r.conditional_variance += r.posterior[k] * spec.variance_rate(k, t);
        r.max_weight_gap = std::max(r.max_weight_gap, std::abs(r.posterior[k] - r.lambda[k]));
    }
    r.sigma_mix_squared = model.sigma_mix_squared(t, x);
    r.variance_gap = std::abs(r.conditional_variance - r.sigma_mix_squared);
    return r;
}

bool BinnedPosterior::consistent(double k) const {
    if (in_bin == 0) return false;
    for (std::size_t i = 0; i < frequency.size(); ++i) {
        const double gap = std::abs(frequency[i] - lambda_bin_mean[i]);
        if (gap > k * std_error[i] && gap > 0.0) return false;
    }
    return true;
}

BinnedPosterior binned_posterior(const PathEnsemble& ensemble, std::size_t time_index, const LocalVolModel& model,
                                 double x, std::optional<double> bandwidth) {
    require_lognormal(model, "binned_posterior");
    if (ensemble.scenario_labels.size() != ensemble.n_paths)
        throw InputError("binned posterior needs an uncertain-volatility ensemble with scenario labels");
    if (time_index >= ensemble.grid.size()) throw DomainError("time index outside the recorded grid");
    const double t = ensemble.grid[time_index];
    const auto levels = ensemble.levels_at(time_index);
    const std::size_t m = model.spec().size();

    BinnedPosterior b;
    b.center = x;
    b.bandwidth = bandwidth.value_or(stats::silverman_bandwidth(levels));
    b.frequency.assign(m, 0.0);
    b.std_error.assign(m, 0.0);
    b.lambda_bin_mean.assign(m, 0.0);
    b.lambda_at_center = lambda_weights(model.spec(), model.curve(), t, x);

    std::vector<double> lam(m);
    for (std::size_t p = 0; p < ensemble.n_paths; ++p) {
        if (std::abs(levels[p] - x) >= b.bandwidth) continue;
        ++b.in_bin;
        b.frequency[ensemble.scenario_labels[p]] += 1.0;
        lambda_weights(model.spec(), model.curve(), t, levels[p], lam);
        for (std::size_t k = 0; k < m; ++k) b.lambda_bin_mean[k] += lam[k];
    }
    if (b.in_bin == 0) return b;
    const auto n = static_cast<double>(b.in_bin);
    for (std::size_t k = 0; k < m; ++k) {
        b.frequency[k] /= n;
        b.lambda_bin_mean[k] /= n;
        const double p = b.lambda_bin_mean[k];
        b.std_error[k] = std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
    }
    return b;
}

SpotVolMoments spot_vol_moments_by_quadrature(const LocalVolModel& model, double maturity) {
    require_lognormal(model, "spot_vol_moments_by_quadrature");
    if (!(maturity > model.spec().epsilon())) throw DomainError("maturity must exceed epsilon");
    const auto& spec = model.spec();
    const auto mom = spec.moments(model.curve(), maturity);

    // integrate over z = ln y, split at the component means
    std::vector<double> breaks;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : mom) {
        const double sd = std::sqrt(c.variance);
        lo = std::min(lo, c.mean - 14.0 * sd);
        hi = std::max(hi, c.mean + 14.0 * sd);
        breaks.push_back(c.mean);
    }
    breaks.push_back(lo);
    breaks.push_back(hi);
    std::sort(breaks.begin(), breaks.end());

    auto density = [&](double z) {
        double q = 0.0;
        for (std::size_t i = 0; i < mom.size(); ++i) q += spec.weight(i) * normal_pdf(z, mom[i].mean, mom[i].variance);
        return q;
    };
    auto expect = [&](auto&& g) {
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            if (breaks[i + 1] <= breaks[i]) continue;
            total += integrate_adaptive([&](double z) { return g(z) * density(z); }, breaks[i], breaks[i + 1],
                                        1e-15, 1e-13)
                         .value;
        }
        return total;
    };
    SpotVolMoments r;
    r.sigma_spot = expect([&](double z) { return model.sigma_mix_squared(maturity, std::exp(z)) * std::exp(z); });
    r.sigma = expect([&](double z) { return model.sigma_mix_squared(maturity, std::exp(z)); });
    r.spot = expect([](double z) { return std::exp(z); });
    return r;
}

AverageVarianceMoments average_variance_moments(const LocalVolModel& model, double maturity) {
    require_lognormal(model, "average_variance_moments");
    if (!(maturity > 0.0)) throw DomainError("maturity must be positive");
    const auto& spec = model.spec();
    const auto& curve = model.curve();

    std::vector<double> breaks{0.0, maturity};
    if (spec.epsilon() < maturity) breaks.push_back(spec.epsilon());
    for (const auto& p : curve.pillars())
        if (p.maturity < maturity) breaks.push_back(p.maturity);
    for (const auto& c : spec.components())
        for (const auto& piece : c.vol.curve().pieces())
            if (piece.end < maturity) breaks.push_back(piece.end);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    // A_u = E{sigma_mix^2(u, S_u) S_u} = s0 e^{R(u)} sum_i lambda_i nu_i(u)^2
    auto a = [&](double u) {
        return spec.s0() * std::exp(curve.integrated_carry(0.0, u)) * weighted_variance_rate(spec, u);
    };
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double l = breaks[i];
        const double r = breaks[i + 1];
        // Gauss-Kronrod nodes are interior, so the piecewise-constant rates are unambiguous
        integral += integrate_adaptive([&](double u) { return std::exp(-curve.integrated_carry(0.0, u)) * a(u); }, l, r,
                                       1e-16, 1e-13)
                        .value;
    }
    AverageVarianceMoments out;
    out.variance_spot = std::exp(curve.integrated_carry(0.0, maturity)) * integral;
    for (std::size_t i = 0; i < spec.size(); ++i) out.variance += spec.weight(i) * spec.vol(i).integrated_variance(maturity);
    out.spot = spec.s0() * std::exp(curve.integrated_carry(0.0, maturity));
    return out;
}

FokkerPlanckGrid default_fokker_planck_grid(const LocalVolModel& model, double t_end, std::size_t n) {
    require_lognormal(model, "default_fokker_planck_grid");
    const auto& spec = model.spec();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double t = std::max(frac * t_end, 2.0 * spec.epsilon() + kPointMassTime);
        const auto mom = spec.moments(model.curve(), t);
        for (std::size_t i = 0; i < spec.size(); ++i) {
            if (spec.weight(i) <= 0.0) continue;
            // tail mass of this component beyond z sd stays below 1e-8
            const double tail = std::min(0.5, 1e-8 / spec.weight(i));
            const double z = -inverse_norm_cdf(tail);
            const double sd = std::sqrt(mom[i].variance);
            lo = std::min(lo, mom[i].mean - z * sd);
            hi = std::max(hi, mom[i].mean + z * sd);
        }
    }
    return {lo, hi, n};
}

namespace {

/// Cell averages of the ln S mixture density at time t.
std::vector<double> mixture_cell_averages(const LocalVolModel& model, const FokkerPlanckGrid& g, double t) {
    const auto& spec = model.spec();
    const auto mom = spec.moments(model.curve(), t);
    const double h = g.spacing();
    std::vector<double> q(g.n, 0.0);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double sd = std::sqrt(mom[k].variance);
        double prev = norm_cdf((g.x_min - mom[k].mean) / sd);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double right = g.x_min + static_cast<double>(i + 1) * h;
            const double cur = norm_cdf((right - mom[k].mean) / sd);
            q[i] += spec.weight(k) * (cur - prev) / h;
            prev = cur;
        }
    }
    return q;
}

struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;
};

/// Conservative finite-volume operator for dq/dt = -d(A q)/dx + d^2(D q)/dx^2
/// with A = r - sigma^2 / 2, D = sigma^2 / 2 and zero flux at both ends.
Tridiagonal fokker_planck_operator(const LocalVolModel& model, const FokkerPlanckGrid& g, double t,
                                   const std::vector<double>& x) {
    const std::size_t n = g.n;
    const double h = g.spacing();
    std::vector<double> s2(n);
    const auto slice = kernels::make_slice(model.spec(), model.curve(), t);
    kernels::active_kernels().sigma_squared(slice, x.data(), s2.data(), n);
    const double r = model.curve().carry_rate(t);

    Tridiagonal op{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    auto left_coeff = [&](std::size_t j) { return (0.5 * (r - 0.5 * s2[j]) + 0.5 * s2[j] / h) / h; };
    auto right_coeff = [&](std::size_t j) { return (-0.5 * (r - 0.5 * s2[j]) + 0.5 * s2[j] / h) / h; };
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) op.lower[i] = left_coeff(i - 1);
        if (i + 1 < n) op.upper[i] = right_coeff(i + 1);
        // column sums vanish, so the diagonal is minus the outgoing coefficients
        double out = 0.0;
        if (i > 0) out += right_coeff(i);
        if (i + 1 < n) out += left_coeff(i);
        op.diag[i] = -out;
    }
    return op;
}

/// Solves (I - c L) y = rhs by the Thomas algorithm.
void solve_shifted(const Tridiagonal& op, double c, std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    std::vector<double> cp(n);
    double b = 1.0 - c * op.diag[0];
    cp[0] = -c * op.upper[0] / b;
    rhs[0] /= b;
    for (std::size_t i = 1; i < n; ++i) {
        const double a = -c * op.lower[i];
        b = 1.0 - c * op.diag[i] - a * cp[i - 1];
        cp[i] = i + 1 < n ? -c * op.upper[i] / b : 0.0;
        rhs[i] = (rhs[i] - a * rhs[i - 1]) / b;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp[i] * rhs[i + 1];
}

/// out = (I + c L) q
void apply_shifted(const Tridiagonal& op, double c, const std::vector<double>& q, std::vector<double>& out) {
    const std::size_t n = q.size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = q[i] + c * op.diag[i] * q[i];
        if (i > 0) v += c * op.lower[i] * q[i - 1];
        if (i + 1 < n) v += c * op.upper[i] * q[i + 1];
        out[i] = v;
    }
}

}  // namespace

FokkerPlanckResult fokker_planck_evolve(const LocalVolModel& model, const FokkerPlanckGrid& grid, double t_end,
                                        const FokkerPlanckOptions& options) {
    require_lognormal(model, "fokker_planck_evolve");
    if (grid.n < 3 || !(grid.x_max > grid.x_min)) throw InputError("Fokker-Planck grid needs n >= 3 and x_max > x_min");
    const double t0 = std::isnan(options.t_start) ? 2.0 * model.spec().epsilon() : options.t_start;
    if (!(t0 > model.spec().epsilon()) && model.spec().size() > 1 && t0 < kPointMassTime)
        throw DomainError("Fokker-Planck start time must be positive");
    if (!(t_end > t0)) throw DomainError("t_end must exceed the start time");

    const double h = grid.spacing();
    std::vector<double> x(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) x[i] = grid.center(i);

    FokkerPlanckResult res;
    res.grid = grid;
    res.t_end = t_end;
    std::vector<double> q = mixture_cell_averages(model, grid, t0);
    auto mass = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double d : v) s += d;
        return s * h;
    };
    res.initial_mass = mass(q);

    std::vector<double> rhs(grid.n);
    double t = t0;
    double dt = options.first_dt;
    int implicit_left = 2 * options.rannacher_steps;
    Tridiagonal op_now = fokker_planck_operator(model, grid, t, x);
    while (t < t_end) {
        double step = std::min(dt, options.max_dt);
        if (t + step > t_end || t_end - (t + step) < 1e-12) step = t_end - t;
        if (implicit_left > 0) {
            // two implicit-Euler half steps
            for (int half = 0; half < 2; ++half) {
                const double tn = t + 0.5 * step * (half + 1);
                const Tridiagonal op_next = fokker_planck_operator(model, grid, tn, x);
                solve_shifted(op_next, 0.5 * step, q);
                op_now = op_next;
            }
            implicit_left -= 2;
        } else {
            const Tridiagonal op_next = fokker_planck_operator(model, grid, t + step, x);
            apply_shifted(op_now, 0.5 * step, q, rhs);
            solve_shifted(op_next, 0.5 * step, rhs);
            q.swap(rhs);
            op_now = op_next;
        }
        t += step;
        dt *= options.growth;
        ++res.steps;
    }

    const double peak = *std::max_element(q.begin(), q.end());
    const double trough = *std::min_element(q.begin(), q.end());
    if (trough < -1e-8 * peak)
        throw NumericalError("Fokker-Planck solution oscillates (min " + std::to_string(trough) + ", max " +
                                 std::to_string(peak) + "); refine the time step or the grid",
                             -trough / peak);

    res.final_mass = mass(q);
    res.log_density = q;
    res.levels.resize(grid.n);
    res.level_density.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        res.levels[i] = std::exp(x[i]);
        res.level_density[i] = q[i] / res.levels[i];
    }
    return res;
}

double l1_distance_to_mixture(const FokkerPlanckResult& result, const LocalVolModel& model) {
    const auto exact = mixture_cell_averages(model, result.grid, result.t_end);
    double l1 = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) l1 += std::abs(result.log_density[i] - exact[i]);
    return l1 * result.grid.spacing();
}

}  // namespace mixdyn
