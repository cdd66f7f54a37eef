#include "doctest.h"

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/mixture.hpp"
#include "mixdyn/quadrature.hpp"

using namespace mixdyn;

TEST_CASE("MixtureSpec validation") {
    CHECK_THROWS_AS(MixtureSpec::lognormal({0.5, 0.6}, {VolCurve::constant(0.1), VolCurve::constant(0.2)}, 1.0),
                    InputError);
    CHECK_THROWS_AS(MixtureSpec::lognormal({1.2, -0.2}, {VolCurve::constant(0.1), VolCurve::constant(0.2)}, 1.0),
                    InputError);
    CHECK_THROWS_AS(MixtureSpec::lognormal({1.0}, {VolCurve::constant(0.1)}, -1.0), InputError);
    CHECK_THROWS_AS(MixtureSpec::lognormal({0.5, 0.5}, {VolCurve::constant(0.1)}, 1.0), InputError);
    CHECK_NOTHROW(MixtureSpec::lognormal({0.5, 0.5 + 1e-12}, {VolCurve::constant(0.1), VolCurve::constant(0.2)}, 1.0));
}

TEST_CASE("common level before epsilon") {
    const auto s = MixtureSpec::lognormal({0.25, 0.75}, {VolCurve::constant(0.4), VolCurve::constant(0.1)}, 1.0);
    const double common = std::sqrt(0.25 * 0.16 + 0.75 * 0.01);
    CHECK(s.common_vol() == doctest::Approx(common).epsilon(1e-15));
    CHECK(s.vol(0).level(0.5 * s.epsilon()) == doctest::Approx(common).epsilon(1e-15));
    CHECK(s.vol(1).level(2.0 * s.epsilon()) == 0.1);
}

TEST_CASE("Lambda weights sum to one and equal lambda before epsilon") {
    const auto m = fixtures::three_component();
    const auto& spec = m.spec();
    for (double t : {1e-5, 0.01, 0.3, 1.0, 4.0, 6.9}) {
        for (double y : {0.2, 0.8, 1.07, 1.3, 3.0, 25.0}) {
            const auto w = lambda_weights(spec, m.curve(), t, y);
            CAPTURE(t);
            CAPTURE(y);
            CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-14);
            for (double x : w) CHECK(x >= 0.0);
        }
    }
    const auto w = lambda_weights(spec, m.curve(), 0.5 * spec.epsilon(), 1.5);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == spec.weight(i));
}

TEST_CASE("Lambda weights survive far tails without underflow") {
    const auto m = fixtures::eurusd();
    const auto w = lambda_weights(m.spec(), m.curve(), 1.0, 1e-6);
    CHECK(std::isfinite(w[0]));
    CHECK(w[0] == doctest::Approx(1.0));
    const auto w2 = lambda_weights(m.spec(), m.curve(), 1.0, 1e6);
    CHECK(w2[0] == doctest::Approx(1.0));
}

TEST_CASE("mixture density integrates to one and matches the CDF") {
    for (const auto& m : {fixtures::three_component(), fixtures::eurusd()}) {
        for (double t : {0.05, 1.0, 5.0}) {
            const auto& spec = m.spec();
            auto p = [&](double z) { return mixture_density(spec, m.curve(), t, std::exp(z)) * std::exp(z); };
            const double mass = integrate_adaptive(p, -12.0, 12.0, 1e-13, 1e-12).value;
            CHECK(std::abs(mass - 1.0) < 1e-10);
            const double part = integrate_adaptive(p, -12.0, std::log(1.1), 1e-13, 1e-12).value;
            CHECK(std::abs(part - mixture_cdf(spec, m.curve(), t, 1.1)) < 1e-10);
        }
    }
    const auto n = fixtures::normal_mixture();
    auto q = [&](double y) { return mixture_density(n.spec(), n.curve(), 1.0, y); };
    CHECK(std::abs(integrate_adaptive(q, -30.0, 30.0, 1e-13, 1e-12).value - 1.0) < 1e-10);
}

TEST_CASE("density queries at t = 0 are rejected") {
    const auto m = fixtures::two_component();
    CHECK_THROWS_AS(mixture_density(m.spec(), m.curve(), 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(mixture_density(m.spec(), m.curve(), 1.0, -1.0), DomainError);
}
