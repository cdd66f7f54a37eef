#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mixdyn/calibration.hpp"
#include "mixdyn/errors.hpp"

using namespace mixdyn;

namespace {

CalibrationProblem synthetic(const MixtureSpec& truth, const YieldCurve& curve, double t) {
    CalibrationProblem p;
    p.s0 = truth.s0();
    p.curve = curve;
    for (double k : fixtures::kTable2Moneyness) p.quotes.push_back({0.0, t, k * truth.s0(), 0.0});
    const auto v = model_smile(truth, curve, p.quotes);
    for (std::size_t i = 0; i < v.size(); ++i) p.quotes[i].implied_vol = v[i];
    return p;
}

}  // namespace

TEST_CASE("flat smile calibrates to a degenerate mixture") {
    CalibrationProblem p;
    p.m = 1;
    for (double k : {0.9, 1.0, 1.1}) p.quotes.push_back({0.0, 1.0, k, 0.17});
    const auto r = calibrate(p);
    CHECK(r.spec.vol(0).variance_rate(0.5) == doctest::Approx(0.17 * 0.17).epsilon(1e-9));
    CHECK(r.loss_value < 1e-20);
}

TEST_CASE("round trip recovers a known two-component mixture") {
    const auto truth = MixtureSpec::lognormal({0.3, 0.7}, {VolCurve::constant(0.25), VolCurve::constant(0.08)}, 1.0);
    auto p = synthetic(truth, YieldCurve::flat(0.03, 0.01), 1.0);
    const auto r = calibrate(p);
    CHECK(r.loss_value < 1e-10);
    for (double res : r.residuals) CHECK(std::abs(res) < 1e-6);
    CHECK(r.spec.weight(0) == doctest::Approx(0.7).epsilon(1e-4));
    CHECK(std::sqrt(r.spec.variance_rate(1, 0.5)) == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("price-space loss also converges") {
    const auto truth = MixtureSpec::lognormal({0.5, 0.5}, {VolCurve::constant(0.3), VolCurve::constant(0.1)}, 1.0);
    auto p = synthetic(truth, YieldCurve::flat(0.0, 0.0), 0.5);
    p.loss = LossSpace::price;
    const auto r = calibrate(p);
    CHECK(r.loss_value < 1e-16);
}

TEST_CASE("calibration is deterministic") {
    const auto truth = MixtureSpec::lognormal({0.2, 0.8}, {VolCurve::constant(0.4), VolCurve::constant(0.1)}, 1.0);
    auto p = synthetic(truth, YieldCurve::flat(0.02, 0.0), 2.0);
    p.starts = 3;
    const auto a = calibrate(p);
    const auto b = calibrate(p);
    CHECK(a.loss_value == b.loss_value);
    CHECK(a.spec.weight(0) == b.spec.weight(0));
}

TEST_CASE("infeasible quotes are reported before fitting") {
    CalibrationProblem p;
    p.quotes = {{0.0, 1.0, 1.0, 0.2}, {0.0, 1.0, 1.1, -0.1}, {0.0, -1.0, 1.0, 0.2}};
    try {
        calibrate(p);
        FAIL("expected InfeasibleQuotesError");
    } catch (const InfeasibleQuotesError& e) {
        REQUIRE(e.diagnostics().size() == 2);
        CHECK(e.diagnostics()[0].index == 1);
        CHECK(e.diagnostics()[1].index == 2);
    }
    p.quotes = {{0.5, 1.0, 1.0, 0.2}};
    CHECK_THROWS_AS(calibrate(p), InputError);
}

TEST_CASE("EUR/USD mixture reproduces the 0y smile it was fitted to") {
    const auto m = fixtures::eurusd();
    std::vector<SmilePoint> q;
    for (double k : fixtures::kTable2Moneyness) q.push_back({0.0, 1.0, k * m.s0(), 0.0});
    const auto v = model_smile(m.spec(), m.curve(), q);
    // model values, frozen: 10.6460 at the money, 15.9683 at 0.8
    CHECK(100 * v[4] == doctest::Approx(10.6460).epsilon(1e-5));
    CHECK(100 * v[0] == doctest::Approx(15.9683).epsilon(1e-5));
}
