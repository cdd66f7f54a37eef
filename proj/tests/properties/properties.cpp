#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/pricing.hpp"
#include "mixdyn/quadrature.hpp"
#include "mixdyn/simulation.hpp"

using namespace mixdyn;

namespace properties {

namespace {

std::vector<LocalVolModel> lognormal_models() {
    return {fixtures::two_component(), fixtures::three_component(), fixtures::eurusd()};
}

Outcome verdict(std::string name, double worst, double limit) {
    std::ostringstream s;
    s << "worst " << worst << " limit " << limit;
    return {std::move(name), worst <= limit, s.str()};
}

}  // namespace

Outcome lambda_normalization() {
    double worst = 0.0;
    auto models = lognormal_models();
    models.push_back(fixtures::normal_mixture());
    for (const auto& m : models) {
        for (double t : {2e-4, 0.01, 0.5, 3.0, 7.0}) {
            for (double u = -60.0; u <= 60.0; u += 0.5) {
                // log-spaced levels in lognormal mode reach far into both tails
                const double y = m.mode() == MixtureMode::lognormal ? m.s0() * std::exp(u) : u;
                const auto lam = lambda_weights(m.spec(), m.curve(), t, y);
                worst = std::max(worst, std::abs(std::accumulate(lam.begin(), lam.end(), 0.0) - 1.0));
            }
        }
    }
    return verdict("lambda weights sum to one", worst, 1e-12);
}

Outcome mixture_density_normalization() {
    double worst = 0.0;
    bool negative = false;
    for (const auto& m : lognormal_models()) {
        for (double t : {0.05, 1.0, 7.0}) {
            // integrate in z = ln y so the wide component does not hide the narrow one
            auto f = [&](double z) {
                const double y = std::exp(z);
                const double p = mixture_density(m.spec(), m.curve(), t, y);
                negative = negative || p < 0.0;
                return p * y;
            };
            const double c = std::log(m.s0());
            const auto r = integrate_adaptive(f, c - 25.0, c + 25.0, 1e-13, 1e-13);
            worst = std::max(worst, std::abs(r.value - 1.0));
        }
    }
    auto out = verdict("mixture density integrates to one", worst, 1e-8);
    if (negative) out = {out.name, false, out.detail + ", negative density seen"};
    return out;
}

Outcome sigma_mix_bounds() {
    double worst = 0.0;
    for (const auto& m : lognormal_models()) {
        for (double t : {0.01, 0.7, 2.5, 6.0}) {
            double lo = INFINITY, hi = 0.0;
            for (std::size_t i = 0; i < m.spec().size(); ++i) {
                lo = std::min(lo, m.spec().variance_rate(i, t));
                hi = std::max(hi, m.spec().variance_rate(i, t));
            }
            for (double u = -8.0; u <= 8.0; u += 0.1) {
                const double s2 = m.sigma_mix_squared(t, m.s0() * std::exp(u));
                worst = std::max({worst, (lo - s2) / lo, (s2 - hi) / hi});
            }
        }
    }
    return verdict("sigma_mix^2 within the component variance range", worst, 1e-14);
}

Outcome put_call_parity() {
    double worst = 0.0;
    for (const auto& m : lognormal_models()) {
        for (double t : {0.25, 1.0, 5.0}) {
            const double dd = m.curve().discount(t, Leg::domestic);
            const double df = m.curve().discount(t, Leg::foreign);
            for (double k = 0.5; k <= 2.0; k += 0.05) {
                const double kk = k * m.s0();
                const double gap = mixture_call(m, kk, t) - mixture_put(m, kk, t) - (m.s0() * df - kk * dd);
                worst = std::max(worst, std::abs(gap));
            }
        }
    }
    return verdict("put-call parity", worst, 1e-12);
}

Outcome price_monotone_convex() {
    double worst_k = 0.0, worst_t = 0.0, worst_convex = 0.0;
    for (const auto& m : lognormal_models()) {
        const double h = 0.01 * m.s0();
        // Calendar order holds at fixed forward moneyness: E(S_T / F_T - k)^+ grows with T.
        // With foreign carry a fixed-strike call can lose value with T.
        auto forward_call = [&](double k, double t) {
            const double df_f = m.curve().discount(t, Leg::foreign);
            const double fwd = m.s0() * df_f / m.curve().discount(t, Leg::domestic);
            return mixture_call(m, k * fwd, t) / (m.s0() * df_f);
        };
        for (double t : {0.5, 2.0, 6.0}) {
            for (double k = 0.6 * m.s0(); k <= 1.6 * m.s0(); k += h) {
                const double c0 = mixture_call(m, k - h, t);
                const double c1 = mixture_call(m, k, t);
                const double c2 = mixture_call(m, k + h, t);
                worst_k = std::max(worst_k, c1 - c0);
                worst_convex = std::max(worst_convex, -(c2 - 2 * c1 + c0));
                const double x = k / m.s0();
                worst_t = std::max(worst_t, forward_call(x, t) - forward_call(x, t + 0.5));
            }
        }
    }
    std::ostringstream s;
    s << "increase in K " << worst_k << ", calendar decrease " << worst_t << ", negative second difference "
      << worst_convex << " (limits 0, 0, 1e-10)";
    return {"call prices decrease and are convex in K, increase in T at fixed forward moneyness",
            worst_k <= 0.0 && worst_t <= 0.0 && worst_convex <= 1e-10, s.str()};
}

Outcome flat_smile_degeneracy() {
    double worst = 0.0;
    for (double vol : {0.05, 0.2, 0.6}) {
        const auto m = LocalVolModel(MixtureSpec::lognormal({1.0}, {VolCurve::constant(vol)}, 1.07), fixtures::table1());
        for (double t : {0.5, 3.0}) {
            const double rd = m.curve().integrated_rate(0, t, Leg::domestic);
            const double rf = m.curve().integrated_rate(0, t, Leg::foreign);
            for (double k : fixtures::kTable2Moneyness) {
                const double kk = k * m.s0();
                const double v = implied_vol_otm(mixture_otm_price(m, kk, t), m.s0(), kk, t, rd, rf) / std::sqrt(t);
                worst = std::max(worst, std::abs(v - vol));
            }
        }
    }
    return verdict("single component gives a flat smile", worst, 1e-10);
}

Outcome seed_determinism() {
    const auto m = fixtures::three_component();
    SimConfig c;
    c.n_paths = 2000;
    c.dt = 0.01;
    c.horizon = 1.0;
    c.record_every = 10;
    const auto a = simulate_local_vol(m, c);
    const auto b = simulate_local_vol(m, c);
    c.threads = 3;
    const auto threaded = simulate_local_vol(m, c);
    auto c2 = c;
    c2.seed += 1;
    const auto other = simulate_local_vol(m, c2);
    c.isa = kernels::Isa::scalar;
    const auto scalar_a = simulate_local_vol(m, c);
    const auto scalar_b = simulate_local_vol(m, c);
    const auto ua = simulate_uncertain_vol(m, c);
    const auto ub = simulate_uncertain_vol(m, c);
    const bool same = a.levels == b.levels && a.avg_variance == b.avg_variance && a.levels == threaded.levels &&
                      scalar_a.levels == scalar_b.levels && ua.levels == ub.levels &&
                      ua.scenario_labels == ub.scenario_labels;
    const bool differs = other.levels != a.levels;
    return {"same seed reproduces paths bit for bit", same && differs,
            std::string(same ? "repeat runs identical" : "repeat runs differ") +
                (differs ? ", new seed changes paths" : ", new seed gives the same paths")};
}

std::vector<Outcome> run_all() {
    return {lambda_normalization(),  mixture_density_normalization(), sigma_mix_bounds(),    put_call_parity(),
            price_monotone_convex(), flat_smile_degeneracy(),         seed_determinism()};
}

}  // namespace properties
