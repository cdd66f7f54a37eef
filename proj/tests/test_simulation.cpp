#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/normal.hpp"
#include "mixdyn/simulation.hpp"
#include "mixdyn/stats.hpp"

using namespace mixdyn;

namespace {
SimConfig small(double horizon = 0.5, std::size_t paths = 4000) {
    SimConfig c;
    c.n_paths = paths;
    c.dt = 1e-2;
    c.horizon = horizon;
    return c;
}
}  // namespace

TEST_CASE("same seed, same paths; different seed, different paths") {
    const auto m = fixtures::two_component();
    const auto a = simulate_local_vol(m, small());
    const auto b = simulate_local_vol(m, small());
    CHECK(a.levels == b.levels);
    CHECK(a.avg_variance == b.avg_variance);
    auto c = small();
    c.seed += 1;
    CHECK(simulate_local_vol(m, c).levels != a.levels);
}

TEST_CASE("thread count does not change the result") {
    const auto m = fixtures::three_component();
    auto one = small();
    one.threads = 1;
    auto four = small();
    four.threads = 4;
    CHECK(simulate_local_vol(m, one).levels == simulate_local_vol(m, four).levels);
    CHECK(simulate_uncertain_vol(m, one).scenario_labels == simulate_uncertain_vol(m, four).scenario_labels);
}

TEST_CASE("a path does not depend on how many others are simulated") {
    const auto m = fixtures::two_component();
    const auto a = simulate_local_vol(m, small(0.5, 100));
    const auto b = simulate_local_vol(m, small(0.5, 1000));
    for (std::size_t p = 0; p < 100; ++p) CHECK(a.terminal()[p] == b.terminal()[p]);
}

TEST_CASE("discounted forward payoff is a martingale") {
    const auto m = fixtures::eurusd();
    auto c = small(1.0, 20000);
    c.dt = 1e-3;
    const auto e = simulate_local_vol(m, c);
    const double df = m.curve().discount(1.0, Leg::domestic);
    const auto est = mc_price(e, 1.0, [](double s) { return s; }, df);
    const double exact = m.s0() * m.curve().discount(1.0, Leg::foreign);
    CHECK(std::abs(est.price - exact) < 3 * est.std_error);
}

TEST_CASE("single-component model reproduces the lognormal law") {
    const auto m = fixtures::gbm(0.2);
    const auto e = simulate_local_vol(m, small(1.0, 20000));
    const double mu = std::log(m.s0()) + 0.02 - 0.02;
    const auto r = stats::ks_test(e.terminal(), [&](double s) { return norm_cdf((std::log(s) - mu) / 0.2); });
    CHECK(r.p_value > 0.01);
}

TEST_CASE("level schemes track the mixture law") {
    const auto m = fixtures::two_component();
    for (Scheme s : {Scheme::euler_level, Scheme::milstein_level}) {
        auto c = small(1.0, 20000);
        c.dt = 1e-3;
        c.scheme = s;
        const auto e = simulate_local_vol(m, c);
        const auto r = stats::ks_test(e.terminal(), [&](double y) { return mixture_cdf(m.spec(), m.curve(), 1.0, y); });
        CHECK(r.p_value > 0.01);
        CHECK(e.rejection_fraction() < 1e-3);
    }
}

TEST_CASE("normal mixture simulates in the level scheme only") {
    const auto m = fixtures::normal_mixture();
    CHECK_THROWS_AS(simulate_local_vol(m, small()), UnsupportedModeError);
    auto c = small(1.0, 20000);
    c.scheme = Scheme::euler_level;
    c.dt = 1e-3;
    const auto e = simulate_local_vol(m, c);
    const auto r = stats::ks_test(e.terminal(), [&](double y) { return mixture_cdf(m.spec(), m.curve(), 1.0, y); });
    CHECK(r.p_value > 0.01);
    CHECK_THROWS_AS(simulate_uncertain_vol(m, c), UnsupportedModeError);
}

TEST_CASE("uncertain-vol labels follow the weights") {
    const auto m = fixtures::three_component();
    const auto e = simulate_uncertain_vol(m, small(0.5, 30000));
    std::vector<double> count(3, 0.0);
    for (auto l : e.scenario_labels) count.at(l) += 1.0;
    const double n = static_cast<double>(e.n_paths);
    for (std::size_t k = 0; k < 3; ++k) {
        const double lam = m.spec().weight(k);
        CHECK(std::abs(count[k] / n - lam) < 3 * std::sqrt(lam * (1 - lam) / n));
    }
}

TEST_CASE("uncertain-vol terminal law is the mixture") {
    const auto m = fixtures::two_component();
    const auto e = simulate_uncertain_vol(m, small(2.0, 20000));
    const auto r = stats::ks_test(e.terminal(), [&](double y) { return mixture_cdf(m.spec(), m.curve(), 2.0, y); });
    CHECK(r.p_value > 0.01);
}

TEST_CASE("recorded grid") {
    const auto m = fixtures::two_component();
    auto c = small(1.0, 10);
    c.record_every = 25;
    const auto e = simulate_local_vol(m, c);
    REQUIRE(e.grid.size() == 5);
    CHECK(e.grid[2] == doctest::Approx(0.5));
    for (double s : e.levels_at(0)) CHECK(s == m.s0());
    for (double v : e.variance_at(0)) CHECK(v == 0.0);
}

TEST_CASE("invalid configurations") {
    const auto m = fixtures::two_component();
    auto c = small();
    c.n_paths = 0;
    CHECK_THROWS_AS(simulate_local_vol(m, c), InputError);
    c = small();
    c.dt = 0.3;
    CHECK_THROWS_AS(simulate_local_vol(m, c), InputError);
    c = small();
    c.s_start = -1.0;
    CHECK_THROWS_AS(simulate_local_vol(m, c), DomainError);
    const auto e = simulate_local_vol(m, small());
    CHECK_THROWS_AS(mc_price(e, 1.0, [](double s) { return s; }, 1.0), DomainError);
}
