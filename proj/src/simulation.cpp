#include "mixdyn/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "mixdyn/errors.hpp"
#include "mixdyn/rng.hpp"

namespace mixdyn {

namespace {

constexpr std::size_t kBlock = 256;

/// Runs fn(first_path, count) over fixed path blocks. Blocks write disjoint
/// output columns, so the result does not depend on the schedule.
template <class Fn>
void for_each_block(std::size_t n_paths, unsigned threads, Fn&& fn) {
    const std::size_t n_blocks = (n_paths + kBlock - 1) / kBlock;
    unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_blocks));
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t b = next++; b < n_blocks; b = next++) {
            const std::size_t first = b * kBlock;
            fn(first, std::min(kBlock, n_paths - first));
        }
    };
    if (workers <= 1) {
        run();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& th : pool) th.join();
}

struct Grid {
    std::vector<double> times;          // all grid times
    std::vector<std::size_t> recorded;  // step indices kept in the ensemble
};

Grid make_grid(const SimConfig& cfg) {
    Grid g;
    const std::size_t n = cfg.n_steps();
    g.times.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g.times[k] = cfg.t_start + static_cast<double>(k) * cfg.dt;
    g.times[n] = cfg.horizon;
    for (std::size_t k = 0; k <= n; ++k) {
        const bool keep = k == 0 || k == n || (cfg.record_every != 0 && k % cfg.record_every == 0);
        if (keep) g.recorded.push_back(k);
    }
    return g;
}

PathEnsemble empty_ensemble(const Grid& g, const SimConfig& cfg) {
    PathEnsemble e;
    e.n_paths = cfg.n_paths;
    e.seed = cfg.seed;
    for (std::size_t k : g.recorded) e.grid.push_back(g.times[k]);
    e.levels.assign(e.grid.size() * cfg.n_paths, 0.0);
    e.avg_variance.assign(e.grid.size() * cfg.n_paths, 0.0);
    return e;
}

/// Drops paths whose terminal level is NaN (rejected by a level scheme).
void compact_rejected(PathEnsemble& e) {
    const std::size_t n = e.n_paths;
    const std::size_t last = e.grid.size() - 1;
    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t p = 0; p < n; ++p)
        if (!std::isnan(e.levels[last * n + p])) keep.push_back(p);
    if (keep.size() == n) return;
    if (keep.empty()) throw NumericalError("every path was rejected by the level scheme", 1.0);
    std::vector<double> levels(e.grid.size() * keep.size());
    std::vector<double> var(levels.size());
    for (std::size_t i = 0; i < e.grid.size(); ++i)
        for (std::size_t j = 0; j < keep.size(); ++j) {
            levels[i * keep.size() + j] = e.levels[i * n + keep[j]];
            var[i * keep.size() + j] = e.avg_variance[i * n + keep[j]];
        }
    if (!e.scenario_labels.empty()) {
        std::vector<std::uint32_t> labels(keep.size());
        for (std::size_t j = 0; j < keep.size(); ++j) labels[j] = e.scenario_labels[keep[j]];
        e.scenario_labels = std::move(labels);
    }
    e.rejected = n - keep.size();
    e.n_paths = keep.size();
    e.levels = std::move(levels);
    e.avg_variance = std::move(var);
}

/// Normal draws for path block [first, first + count) at step k. Draws come in
/// pairs from one Philox block, so even steps fill both buffers.
struct NormalBuffer {
    double even[kBlock];
    double odd[kBlock];

    const double* at(std::uint64_t seed, std::size_t first, std::size_t count, std::size_t step) {
        if (step % 2 == 0) {
            for (std::size_t j = 0; j < count; ++j) {
                const auto z = PathStream(seed, StreamId::brownian, first + j)
                                   .normal_pair(static_cast<std::uint32_t>(step / 2));
                even[j] = z[0];
                odd[j] = z[1];
            }
            return even;
        }
        return odd;
    }
};

double start_level(const LocalVolModel& model, const SimConfig& cfg) {
    const double s = cfg.s_start.value_or(model.s0());
    if (!model.spec().in_support(s)) throw DomainError("starting level outside the model support");
    return s;
}

}  // namespace

void SimConfig::validate() const {
    if (n_paths == 0) throw InputError("simulation needs at least one path");
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    if (!(t_start >= 0.0)) throw InputError("start time must be non-negative");
    if (!(horizon > t_start)) throw InputError("horizon must exceed the start time");
    const double steps = (horizon - t_start) / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw InputError("time step does not divide the simulation window");
    if (steps > static_cast<double>(std::numeric_limits<std::uint32_t>::max()))
        throw InputError("too many time steps");
}

std::size_t SimConfig::n_steps() const {
    validate();
    return static_cast<std::size_t>(std::llround((horizon - t_start) / dt));
}

std::span<const double> PathEnsemble::levels_at(std::size_t time_index) const {
    return std::span<const double>(levels).subspan(time_index * n_paths, n_paths);
}

std::span<const double> PathEnsemble::variance_at(std::size_t time_index) const {
    return std::span<const double>(avg_variance).subspan(time_index * n_paths, n_paths);
}

double PathEnsemble::rejection_fraction() const {
    const double total = static_cast<double>(n_paths + rejected);
    return total > 0.0 ? static_cast<double>(rejected) / total : 0.0;
}

PathEnsemble simulate_local_vol(const LocalVolModel& model, const SimConfig& cfg) {
    cfg.validate();
    const auto& spec = model.spec();
    const bool lognormal = spec.mode() == MixtureMode::lognormal;
    if (!lognormal && cfg.scheme == Scheme::euler_log)
        throw UnsupportedModeError("euler-log scheme requires a lognormal-mixture model");
    const auto& table = cfg.isa ? kernels::kernel_table(*cfg.isa) : kernels::active_kernels();

    const Grid g = make_grid(cfg);
    const std::size_t n_steps = g.times.size() - 1;
    std::vector<kernels::MixtureSlice> slices(n_steps);
    std::vector<double> carry(n_steps, 0.0);
    for (std::size_t k = 0; k < n_steps; ++k) {
        slices[k] = kernels::make_slice(spec, model.curve(), g.times[k]);
        if (lognormal) carry[k] = model.curve().integrated_carry(g.times[k], g.times[k + 1]);
    }

    PathEnsemble e = empty_ensemble(g, cfg);
    const double s_start = start_level(model, cfg);
    const std::size_t n = cfg.n_paths;

    for_each_block(n, cfg.threads, [&](std::size_t first, std::size_t count) {
        double x[kBlock];
        double acc[kBlock];
        NormalBuffer normals;
        const bool log_state = cfg.scheme == Scheme::euler_log;
        std::fill_n(x, count, log_state ? std::log(s_start) : s_start);
        std::fill_n(acc, count, 0.0);

        auto record = [&](std::size_t slot) {
            for (std::size_t j = 0; j < count; ++j) {
                e.levels[slot * n + first + j] = log_state ? std::exp(x[j]) : x[j];
                e.avg_variance[slot * n + first + j] = acc[j];
            }
        };
        std::size_t slot = 0;
        record(slot++);

        for (std::size_t k = 0; k < n_steps; ++k) {
            const double dt = g.times[k + 1] - g.times[k];
            const double* z = normals.at(cfg.seed, first, count, k);
            const auto& slice = slices[k];
            if (log_state) {
                table.log_euler_step(slice, carry[k], dt, x, z, acc, count);
            } else {
                const bool milstein = cfg.scheme == Scheme::milstein_level;
                const double sqdt = std::sqrt(dt);
                for (std::size_t j = 0; j < count; ++j) {
                    const double y = x[j];
                    if (std::isnan(y)) continue;
                    if (lognormal) {
                        const auto v = kernels::evaluate(slice, std::log(y));
                        const double sigma = std::sqrt(v.variance_rate);
                        double next = y + carry[k] * y + sigma * y * sqdt * z[j];
                        if (milstein) {
                            // b = sigma y, b' = sigma + (d sigma^2 / d ln y) / (2 sigma)
                            const double db = sigma + v.variance_slope / (2.0 * sigma);
                            next += 0.5 * sigma * y * db * (z[j] * z[j] - 1.0) * dt;
                        }
                        acc[j] += v.variance_rate * dt;
                        x[j] = next > 0.0 ? next : std::numeric_limits<double>::quiet_NaN();
                    } else {
                        const auto v = kernels::evaluate(slice, y);
                        const double sigma = std::sqrt(v.variance_rate);
                        double next = y + v.drift * dt + sigma * sqdt * z[j];
                        if (milstein) next += 0.25 * v.variance_slope * (z[j] * z[j] - 1.0) * dt;
                        acc[j] += v.variance_rate * dt;
                        x[j] = next;
                    }
                }
            }
            if (slot < g.recorded.size() && g.recorded[slot] == k + 1) record(slot++);
        }
    });

    compact_rejected(e);
    return e;
}

PathEnsemble simulate_uncertain_vol(const LocalVolModel& model, const SimConfig& cfg) {
    cfg.validate();
    const auto& spec = model.spec();
    if (spec.mode() != MixtureMode::lognormal)
        throw UnsupportedModeError("the uncertain-volatility engine requires a lognormal-mixture model");

    const Grid g = make_grid(cfg);
    const std::size_t n_steps = g.times.size() - 1;
    const std::size_t m = spec.size();
    std::vector<double> carry(n_steps);
    std::vector<double> dvar(n_steps * m);
    for (std::size_t k = 0; k < n_steps; ++k) {
        carry[k] = model.curve().integrated_carry(g.times[k], g.times[k + 1]);
        for (std::size_t i = 0; i < m; ++i)
            dvar[k * m + i] = spec.vol(i).integrated_variance(g.times[k], g.times[k + 1]);
    }
    std::vector<double> cumulative(m);
    std::partial_sum(spec.weights().begin(), spec.weights().end(), cumulative.begin());

    PathEnsemble e = empty_ensemble(g, cfg);
    e.scenario_labels.resize(cfg.n_paths);
    const double s_start = start_level(model, cfg);
    const std::size_t n = cfg.n_paths;

    for_each_block(n, cfg.threads, [&](std::size_t first, std::size_t count) {
        double x[kBlock];
        double acc[kBlock];
        std::uint32_t label[kBlock];
        NormalBuffer normals;
        for (std::size_t j = 0; j < count; ++j) {
            const double u = PathStream(cfg.seed, StreamId::scenario, first + j).uniform(0);
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end() - 1, u);
            label[j] = static_cast<std::uint32_t>(std::distance(cumulative.begin(), it));
            e.scenario_labels[first + j] = label[j];
            x[j] = std::log(s_start);
            acc[j] = 0.0;
        }
        auto record = [&](std::size_t slot) {
            for (std::size_t j = 0; j < count; ++j) {
                e.levels[slot * n + first + j] = std::exp(x[j]);
                e.avg_variance[slot * n + first + j] = acc[j];
            }
        };
        std::size_t slot = 0;
        record(slot++);
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double* z = normals.at(cfg.seed, first, count, k);
            for (std::size_t j = 0; j < count; ++j) {
                const double dv = dvar[k * m + label[j]];
                x[j] += carry[k] - 0.5 * dv + std::sqrt(dv) * z[j];
                acc[j] += dv;
            }
            if (slot < g.recorded.size() && g.recorded[slot] == k + 1) record(slot++);
        }
    });
    return e;
}

McEstimate mc_price(const PathEnsemble& ensemble, double maturity, const std::function<double(double)>& payoff,
                    double discount) {
    if (ensemble.n_paths == 0 || ensemble.grid.empty()) throw InputError("cannot price on an empty ensemble");
    if (std::abs(ensemble.horizon() - maturity) > 1e-9 * std::max(1.0, maturity))
        throw DomainError("ensemble horizon " + std::to_string(ensemble.horizon()) +
                          " does not match payoff maturity " + std::to_string(maturity));
    const auto st = ensemble.terminal();
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t count = 0;
    for (double s : st) {
        const double v = payoff(s);
        ++count;
        const double d = v - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (v - mean);
    }
    const double var = count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
    return {discount * mean, discount * std::sqrt(var / static_cast<double>(count))};
}

}  // namespace mixdyn
