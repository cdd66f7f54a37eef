#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "mixdyn/errors.hpp"
#include "mixdyn/kernels.hpp"
#include "mixdyn/rng.hpp"

using namespace mixdyn;
using namespace mixdyn::kernels;

namespace {

struct Inputs {
    std::vector<double> z, normals;
};

// odd length so the vector tail is exercised
Inputs inputs(const MixtureSlice& s, std::size_t n = 1001) {
    Inputs in{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const PathStream ps(7, StreamId::auxiliary, i);
        in.z[i] = s.mean[0] + 6.0 * (ps.uniform(0) - 0.5);
        in.normals[i] = ps.normal(1);
    }
    return in;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("scalar kernel matches the model coefficient") {
    const auto m = fixtures::three_component();
    const auto s = make_slice(m.spec(), m.curve(), 1.3);
    const auto in = inputs(s);
    std::vector<double> out(in.z.size());
    detail::sigma_squared_scalar(s, in.z.data(), out.data(), out.size());
    for (std::size_t i = 0; i < out.size(); i += 50)
        CHECK(rel(out[i], m.sigma_mix_squared(1.3, std::exp(in.z[i]))) < 1e-12);
}

TEST_CASE("slice before epsilon carries the common rate") {
    const auto m = fixtures::two_component();
    const auto s = make_slice(m.spec(), m.curve(), 0.5 * m.spec().epsilon());
    CHECK(s.m == 1);
    CHECK(s.rate[0] == doctest::Approx(m.spec().common_vol() * m.spec().common_vol()));
}

#if defined(MIXDYN_HAVE_AVX2)
TEST_CASE("AVX2 kernels agree with the scalar reference") {
    if (!isa_supported(Isa::avx2)) return;
    for (const auto& m : {fixtures::two_component(), fixtures::three_component(), fixtures::eurusd()}) {
        for (double t : {0.01, 1.0, 6.5}) {
            const auto s = make_slice(m.spec(), m.curve(), t);
            auto in = inputs(s);
            std::vector<double> a(in.z.size()), b(in.z.size());
            detail::sigma_squared_scalar(s, in.z.data(), a.data(), a.size());
            detail::sigma_squared_avx2(s, in.z.data(), b.data(), b.size());
            double worst = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel(b[i], a[i]));
            CHECK(worst < 1e-13);

            auto za = in.z, zb = in.z;
            std::vector<double> va(za.size(), 0.0), vb(zb.size(), 0.0);
            detail::log_euler_step_scalar(s, 0.00002, 1e-3, za.data(), in.normals.data(), va.data(), za.size());
            detail::log_euler_step_avx2(s, 0.00002, 1e-3, zb.data(), in.normals.data(), vb.data(), zb.size());
            double worst_z = 0.0, worst_v = 0.0;
            for (std::size_t i = 0; i < za.size(); ++i) {
                worst_z = std::max(worst_z, std::abs(zb[i] - za[i]));
                worst_v = std::max(worst_v, rel(vb[i], va[i]));
            }
            CHECK(worst_z < 1e-14);
            CHECK(worst_v < 1e-13);
        }
    }
}
#endif

TEST_CASE("kernel selection") {
    CHECK(kernel_table(Isa::scalar).isa == Isa::scalar);
    CHECK(parse_isa("scalar") == Isa::scalar);
    CHECK_THROWS_AS(parse_isa("sse9"), InputError);
    if (!isa_supported(Isa::avx2)) CHECK_THROWS_AS(kernel_table(Isa::avx2), UnsupportedModeError);
}
