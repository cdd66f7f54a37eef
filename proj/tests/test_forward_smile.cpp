#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mixdyn/forward_smile.hpp"

using namespace mixdyn;

TEST_CASE("expected spot follows the carry") {
    const auto m = fixtures::eurusd();
    CHECK(expected_spot(m, 0.0) == m.s0());
    // Table 1 discount factors at 1y
    CHECK(expected_spot(m, 1.0) == doctest::Approx(1.07 * 0.985738 / 0.974454).epsilon(1e-12));
}

TEST_CASE("single component gives a flat forward smile") {
    const auto m = fixtures::gbm(0.15);
    ForwardSmileRequest r;
    r.t = 1.0;
    r.maturity = 2.0;
    r.moneyness = fixtures::kTable2Moneyness;
    r.sim.n_paths = 20000;
    r.sim.dt = 1e-2;
    const auto row = conditional_future_smile(m, r);
    for (const auto& c : row.cells) {
        REQUIRE(c.implied_vol);
        CHECK(std::abs(*c.implied_vol - 0.15) < 0.005);
    }
}

TEST_CASE("known-scenario smile is flat at the scenario vol") {
    const auto m = fixtures::eurusd();
    for (std::size_t k = 0; k < 2; ++k) {
        const auto row = known_scenario_smile(m, k, 2.0, 3.0, fixtures::kTable2Moneyness);
        const double nu = std::sqrt(m.spec().variance_rate(k, 2.5));
        for (const auto& c : row.cells) CHECK(*c.implied_vol == doctest::Approx(nu).epsilon(1e-9));
    }
}

TEST_CASE("uncertain-vol forward smile at t = 0 is the spot smile") {
    const auto m = fixtures::two_component();
    ForwardSmileRequest r;
    r.maturity = 1.0;
    r.moneyness = {0.9, 1.0, 1.1};
    r.engine = SmileEngine::uncertain_vol;
    const auto a = conditional_future_smile(m, r);
    r.engine = SmileEngine::local_vol;
    const auto b = conditional_future_smile(m, r);
    for (std::size_t i = 0; i < 3; ++i) CHECK(*a.cells[i].implied_vol == doctest::Approx(*b.cells[i].implied_vol));
}

TEST_CASE("flattening metric") {
    std::vector<SmilePoint> a{{0, 1, 0.8, 0.1617}, {0, 1, 1.0, 0.1072}, {0, 1, 1.2, 0.1361}};
    std::vector<SmilePoint> b{{6, 7, 0.8, 0.1114}, {6, 7, 1.0, 0.1043}, {6, 7, 1.2, 0.1068}};
    const auto m = smile_flattening_metric({a, b});
    CHECK(m[0] == doctest::Approx(0.0545));
    CHECK(m[1] == doctest::Approx(0.0071));
}
