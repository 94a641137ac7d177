#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace qpk::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Counter-based uniform generator. Draw k (1-based) of a stream with seed s
/// is mix64(s + k * kGolden); the stream object just tracks the counter.
///
/// The exact draw algorithms below are part of the artifact contract so that
/// recorded seeds reproduce datasets, initializations and trajectories:
///   uniform  u  = (next_u64() >> 11) * 2^-53                  in [0, 1)
///   gaussian g  = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)          (Box-Muller,
///                 cosine branch only; two uniforms per draw)
///   sign        = +1 if the top bit of next_u64() is 0, else -1
///   below(n)    = high 64 bits of next_u64() * n               (Lemire)
class Stream {
  public:
    explicit constexpr Stream(std::uint64_t seed) : seed_(seed) {}

    constexpr std::uint64_t next_u64() { return mix64(seed_ + (++counter_) * kGolden); }

    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_gaussian() {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    int next_sign() { return (next_u64() >> 63) ? -1 : +1; }

    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

/// Derives an independent stream seed from a base seed and a textual tag.
/// FNV-1a over the base (little-endian) followed by the tag bytes, finalized
/// with mix64.
inline constexpr std::uint64_t derive(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (int i = 0; i < 8; ++i) {
        h ^= (base >> (8 * i)) & 0xFFull;
        h *= 0x100000001B3ull;
    }
    for (const char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return mix64(h);
}

inline constexpr std::uint64_t derive(std::uint64_t base, std::uint64_t salt) {
    return mix64(base ^ (salt + kGolden) * 0xFF51AFD7ED558CCDull);
}

} // namespace qpk::rng
