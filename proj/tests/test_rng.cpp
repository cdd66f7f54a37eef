#include "doctest.h"

#include <cmath>
#include <set>

#include "mixdyn/rng.hpp"

using namespace mixdyn;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
    static_assert(Philox4x32::block({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5);
}

TEST_CASE("uniform_open stays inside (0, 1)") {
    CHECK(uniform_open(0, 0) > 0.0);
    CHECK(uniform_open(0xffffffff, 0xffffffff) < 1.0);
    CHECK(std::isfinite(inverse_norm_cdf(uniform_open(0, 0))));
}

TEST_CASE("path streams are pure and disjoint") {
    const PathStream a(42, StreamId::brownian, 7);
    const PathStream b(42, StreamId::brownian, 7);
    const PathStream other_path(42, StreamId::brownian, 8);
    const PathStream other_stream(42, StreamId::scenario, 7);
    const PathStream other_seed(43, StreamId::brownian, 7);
    for (std::uint32_t j = 0; j < 16; ++j) {
        CHECK(a.normal(j) == b.normal(j));
        CHECK(a.uniform(j) != other_path.uniform(j));
        CHECK(a.uniform(j) != other_stream.uniform(j));
        CHECK(a.uniform(j) != other_seed.uniform(j));
    }
    // out-of-order access gives the same draws
    CHECK(a.normal_pair(5)[1] == a.normal(11));
}

TEST_CASE("uniform draws have the right first two moments") {
    const PathStream s(1, StreamId::auxiliary, 0);
    const int n = 200000;
    double m = 0.0;
    double m2 = 0.0;
    for (int j = 0; j < n; ++j) {
        const double u = s.uniform(static_cast<std::uint32_t>(j));
        m += u;
        m2 += u * u;
    }
    m /= n;
    m2 /= n;
    CHECK(std::abs(m - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(m2 - 1.0 / 3.0) < 4.0 * std::sqrt(4.0 / 45.0 / n));
}
