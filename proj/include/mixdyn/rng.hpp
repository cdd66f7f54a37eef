#pragma once

#include <array>
#include <cstdint>

#include "mixdyn/normal.hpp"

namespace mixdyn {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A pure
/// function of (counter, key): any block can be produced in any order.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

/// Disjoint substreams of one seed. Brownian increments and scenario draws
/// never share counters.
enum class StreamId : std::uint32_t { brownian = 0, scenario = 1, auxiliary = 2 };

/// Uniform in the open interval (0, 1) from the top 52 of 64 random bits:
/// (k + 1/2) 2^-52 is exact, so neither end is reachable.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Reproducible random source for a single path: draw j of the path is a
/// pure function of (seed, stream, path, j).
class PathStream {
public:
    PathStream(std::uint64_t seed, StreamId stream, std::uint64_t path) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(static_cast<std::uint32_t>(stream)),
          path_lo_(static_cast<std::uint32_t>(path)),
          path_hi_(static_cast<std::uint32_t>(path >> 32)) {}

    /// Two uniforms for draw pair `pair` (draws 2 pair and 2 pair + 1).
    std::array<double, 2> uniform_pair(std::uint32_t pair) const noexcept {
        const auto out = Philox4x32::block({pair, path_lo_, path_hi_, stream_}, key_);
        return {uniform_open(out[0], out[1]), uniform_open(out[2], out[3])};
    }

    /// Two standard normals by inverse CDF.
    std::array<double, 2> normal_pair(std::uint32_t pair) const noexcept {
        const auto u = uniform_pair(pair);
        return {inverse_norm_cdf(u[0]), inverse_norm_cdf(u[1])};
    }

    double uniform(std::uint32_t index) const noexcept { return uniform_pair(index / 2)[index % 2]; }
    double normal(std::uint32_t index) const noexcept { return inverse_norm_cdf(uniform(index)); }

private:
    Philox4x32::Key key_;
    std::uint32_t stream_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
};

}  // namespace mixdyn
