#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/vol_curve.hpp"
#include "mixdyn/yield_curve.hpp"

using namespace mixdyn;

TEST_CASE("integrated rates from the Table 1 discount factors") {
    const auto c = fixtures::table1();
    CHECK(std::abs(c.integrated_rate(1.0, 2.0, Leg::foreign) - 0.025529620191474276528) < 1e-15);
    CHECK(std::abs(c.integrated_rate(0.0, 1.0, Leg::domestic) - 0.02587796484285313933) < 1e-15);
    CHECK(c.discount(3.0, Leg::domestic) == doctest::Approx(0.914757).epsilon(1e-15));
    // R(t, T) = R(0, T) - R(0, t)
    const double lhs = c.integrated_carry(1.5, 4.2);
    const double rhs = c.integrated_carry(0.0, 4.2) - c.integrated_carry(0.0, 1.5);
    CHECK(std::abs(lhs - rhs) < 1e-15);
}

TEST_CASE("log-linear interpolation gives piecewise-flat forwards") {
    const auto c = fixtures::table1();
    const double r = c.short_rate(2.5, Leg::domestic);
    CHECK(std::abs(r - std::log(0.946724 / 0.914757)) < 1e-14);
    CHECK(c.short_rate(2.2, Leg::domestic) == r);
    CHECK(std::abs(c.carry_rate(0.3) - (c.short_rate(0.3, Leg::domestic) - c.short_rate(0.3, Leg::foreign))) <
          1e-16);
}

TEST_CASE("curve rejects bad input and extrapolation") {
    const auto c = fixtures::table1();
    CHECK_THROWS_AS(c.discount(7.5, Leg::domestic), ExtrapolationError);
    CHECK_THROWS_AS(c.integrated_rate(-0.1, 1.0, Leg::domestic), DomainError);
    CHECK_THROWS_AS(YieldCurve({}), InputError);
    CHECK_THROWS_AS(YieldCurve({{1.0, -0.9, 0.9}}), InputError);
    CHECK_THROWS_AS(YieldCurve({{2.0, 0.9, 0.9}, {1.0, 0.95, 0.95}}), InputError);
}

TEST_CASE("flat curve") {
    const auto c = YieldCurve::flat(0.05, 0.02);
    CHECK(c.integrated_rate(0.0, 3.0, Leg::domestic) == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(c.integrated_carry(1.0, 2.0) == doctest::Approx(0.03).epsilon(1e-13));
}

TEST_CASE("piecewise vol curve integrals") {
    const auto v = VolCurve::piecewise({{1.0, 0.2}, {3.0, 0.1}, {1e300, 0.3}});
    CHECK(v.level(0.5) == 0.2);
    CHECK(v.level(1.0) == 0.1);
    CHECK(v.level(10.0) == 0.3);
    CHECK(v.integrated_variance(2.0) == doctest::Approx(0.04 + 0.01).epsilon(1e-14));
    CHECK(v.integrated_variance(1.5, 4.0) == doctest::Approx(0.015 + 0.09).epsilon(1e-14));
    CHECK_THROWS_AS(VolCurve::constant(0.0), InputError);
    CHECK_THROWS_AS(VolCurve::piecewise({{2.0, 0.1}, {1.0, 0.1}}), InputError);
}

TEST_CASE("regularized curve holds the common level up to epsilon") {
    const auto v = VolCurve::constant(0.3).regularized(1e-3, 0.2);
    CHECK(v.level(5e-4) == 0.2);
    CHECK(v.level(1e-3) == 0.2);
    CHECK(v.level(2e-3) == 0.3);
    CHECK(v.raw_level(5e-4) == 0.3);
    CHECK(v.integrated_variance(1.0) == doctest::Approx(1e-3 * 0.04 + 0.999 * 0.09).epsilon(1e-14));
}
