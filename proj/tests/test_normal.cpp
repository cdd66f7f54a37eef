#include "doctest.h"

#include <cmath>

#include "mixdyn/normal.hpp"

using namespace mixdyn;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("norm_cdf matches high-precision values") {
    // mpmath at 40 digits
    struct Row {
        double x, p;
    };
    const Row rows[] = {{-8.0, 6.2209605742717841235e-16}, {-5.0, 2.8665157187919391167e-7},
                        {-1.5, 0.066807201268858066004},   {0.3, 0.61791142218895263307},
                        {2.0, 0.9772498680518207928},      {5.0, 0.99999971334842812081},
                        {8.0, 0.9999999999999993779}};
    for (const auto& r : rows) {
        CAPTURE(r.x);
        CHECK(rel(norm_cdf(r.x), r.p) < 1e-15);
    }
}

TEST_CASE("inverse_norm_cdf matches high-precision quantiles") {
    struct Row {
        double p, x;
    };
    // mpmath, evaluated at the exact binary inputs (1e-300 by root finding on log Phi)
    const Row rows[] = {{1e-300, -37.047096299361199}, {1e-20, -9.2623400897984075796},
                        {1e-10, -6.3613409024040561991},  {0.001, -3.0902323061678135354},
                        {0.02425, -1.9729610513118848376}, {0.3, -0.52440051270804081597},
                        {0.975, 1.9599639845400538556},   {0.999999, 4.7534243088170877657}};
    for (const auto& r : rows) {
        CAPTURE(r.p);
        CHECK(rel(inverse_norm_cdf(r.p), r.x) < 1e-14);
    }
    CHECK(inverse_norm_cdf(0.5) == 0.0);
}

TEST_CASE("inverse_norm_cdf inverts norm_cdf") {
    for (double x = -7.5; x <= 7.5; x += 0.25) {
        CAPTURE(x);
        // the upper tail loses digits in p itself; compare there via symmetry
        const double back = x > 0.0 ? -inverse_norm_cdf(norm_cdf(-x)) : inverse_norm_cdf(norm_cdf(x));
        CHECK(std::abs(back - x) < 1e-13 * std::max(1.0, std::abs(x)));
    }
}

TEST_CASE("normal_pdf of an equal-weight mixture at zero") {
    const double v = 0.5 * normal_pdf(0.0, 0.0, 1.0) + 0.5 * normal_pdf(0.0, 0.0, 4.0);
    CHECK(rel(v, 0.29920671030107450845) < 1e-15);
    CHECK(std::abs(normal_log_pdf(1.3, 0.2, 0.7) - std::log(normal_pdf(1.3, 0.2, 0.7))) < 1e-15);
}
