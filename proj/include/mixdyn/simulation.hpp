#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mixdyn/kernels.hpp"
#include "mixdyn/local_vol.hpp"

namespace mixdyn {

/// euler_log: Euler on ln S (lognormal mode only; keeps S > 0).
/// euler_level / milstein_level: schemes on the level itself; in lognormal
/// mode paths that reach S <= 0 are rejected and counted.
enum class Scheme { euler_log, euler_level, milstein_level };

struct SimConfig {
    std::size_t n_paths = 10000;
    double dt = 1e-3;
    Scheme scheme = Scheme::euler_log;
    std::uint64_t seed = 20030210;
    double t_start = 0.0;
    /// Starting level; defaults to the model's s0.
    std::optional<double> s_start;
    double horizon = 1.0;
    /// Keep every k-th grid time in the ensemble (0: start and horizon only).
    std::size_t record_every = 0;
    /// Worker threads; 0 uses the hardware concurrency.
    unsigned threads = 0;
    /// Kernel variant; unset uses kernels::active_kernels().
    std::optional<kernels::Isa> isa;

    void validate() const;
    std::size_t n_steps() const;
};

/// Simulated trajectories on the recorded part of the time grid.
struct PathEnsemble {
    std::vector<double> grid;
    std::size_t n_paths = 0;
    /// levels[i * n_paths + p]: level of path p at grid[i].
    std::vector<double> levels;
    /// Running integral of the squared (percentage) diffusion coefficient
    /// from t_start, same layout as `levels`.
    std::vector<double> avg_variance;
    /// Component index drawn for each path (uncertain-volatility engine only).
    std::vector<std::uint32_t> scenario_labels;
    std::size_t rejected = 0;
    std::uint64_t seed = 0;

    std::span<const double> levels_at(std::size_t time_index) const;
    std::span<const double> variance_at(std::size_t time_index) const;
    std::span<const double> terminal() const { return levels_at(grid.size() - 1); }
    std::span<const double> terminal_variance() const { return variance_at(grid.size() - 1); }
    double horizon() const { return grid.back(); }
    double rejection_fraction() const;
};

/// Simulates the mixture diffusion dS = r S dt + sigma_mix(t, S) S dW
/// (lognormal mode) or dY = f dt + sigma_f dW (normal mode). Deterministic
/// given the seed and kernel variant: path p only ever reads its own
/// counter-based substream.
PathEnsemble simulate_local_vol(const LocalVolModel& model, const SimConfig& cfg);

/// Geometric Brownian motion whose volatility curve is drawn once, with
/// probabilities lambda and independently of W, from the component curves.
/// Steps are exact in distribution. Lognormal mode only.
PathEnsemble simulate_uncertain_vol(const LocalVolModel& model, const SimConfig& cfg);

struct McEstimate {
    double price;
    double std_error;
};

/// Discounted sample mean of payoff(S_T) and its standard error.
McEstimate mc_price(const PathEnsemble& ensemble, double maturity, const std::function<double(double)>& payoff,
                    double discount);

}  // namespace mixdyn
