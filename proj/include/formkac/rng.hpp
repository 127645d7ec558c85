#pragma once

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function
// of (seed, counter), so a path's noise does not depend on which worker
// generates it or in which order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace formkac {

using Philox4x32 = std::array<std::uint32_t, 4>;

inline Philox4x32 philox4x32(Philox4x32 ctr, std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Seed for a named sub-module, derived from the experiment seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view module)
{
    return splitmix64(seed ^ fnv1a(module));
}

/// Random streams attached to one Monte Carlo path. Stream ids separate the
/// step normals from the auxiliary uniforms used by the boundary scheme.
class PathRng {
public:
    enum Stream : std::uint32_t { kNormals = 0, kUniforms = 1, kRefineNormals = 2, kRefineUniforms = 3 };

    PathRng(std::uint64_t seed, std::uint64_t path)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path)), path_hi_(static_cast<std::uint32_t>(path >> 32))
    {
    }

    /// Uniform on (0, 1) for draw number idx of a stream.
    double uniform(Stream s, std::uint64_t idx) const
    {
        const auto block = raw(s, idx / 4);
        return to_unit(block[idx % 4]);
    }

    /// Standard normal for draw number idx of a stream (Box-Muller on lane pairs).
    double normal(Stream s, std::uint64_t idx) const
    {
        const auto block = raw(s, idx / 4);
        const int lane = static_cast<int>(idx % 4);
        const int pair = lane & ~1;
        const double r = std::sqrt(-2.0 * std::log(to_unit(block[pair])));
        const double angle = 2.0 * std::numbers::pi * to_unit(block[pair + 1]);
        return (lane & 1) ? r * std::sin(angle) : r * std::cos(angle);
    }

    /// The four normals normal(s, 4*block) .. normal(s, 4*block + 3).
    std::array<double, 4> normal_block(Stream s, std::uint64_t block) const
    {
        const auto b = raw(s, block);
        std::array<double, 4> out{};
        for (int pair = 0; pair < 4; pair += 2) {
            const double r = std::sqrt(-2.0 * std::log(to_unit(b[pair])));
            const double angle = 2.0 * std::numbers::pi * to_unit(b[pair + 1]);
            out[pair] = r * std::cos(angle);
            out[pair + 1] = r * std::sin(angle);
        }
        return out;
    }

private:
    Philox4x32 raw(Stream s, std::uint64_t block) const
    {
        return philox4x32({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32) ^ (s << 24),
                           path_lo_, path_hi_},
                          key_);
    }
    static double to_unit(std::uint32_t v) { return (static_cast<double>(v) + 0.5) * 0x1p-32; }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
};

/// Sequential reader of one normal stream that reuses each Philox block.
class NormalReader {
public:
    NormalReader(const PathRng& rng, PathRng::Stream s) : rng_(rng), stream_(s) {}

    double operator()(std::uint64_t idx)
    {
        const std::uint64_t block = idx / 4;
        if (block != block_) {
            cache_ = rng_.normal_block(stream_, block);
            block_ = block;
        }
        return cache_[idx % 4];
    }

private:
    const PathRng& rng_;
    PathRng::Stream stream_;
    std::uint64_t block_ = ~std::uint64_t{0};
    std::array<double, 4> cache_{};
};

}  // namespace formkac
