#pragma once

#include <cstdint>

namespace rfl {

/**
 * Deterministic 64-bit RNG used by the instance generator.
 *
 * The generator is pinned bit-exactly so that instances reproduce across
 * platforms and compilers:
 *  - seeding: splitmix64 (Steele/Lea/Flood) expands a 64-bit seed into the
 *    256-bit xoshiro state,
 *  - stream:  xoshiro256++ (Blackman/Vigna, 2019 reference constants),
 *  - doubles: 53 high bits mapped to [0,1) as (x >> 11) * 2^-53.
 */
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

class Xoshiro256PP {
  public:
    explicit Xoshiro256PP(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform draw in [0,1) with 53 bits of resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform draw in [lo,hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in {lo, ..., hi} (inclusive), via rejection-free scaling.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(next_double() * static_cast<double>(span));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

/// Derives an independent substream for a keyed entity (e.g. one (site,
/// facility) pair) so that draws for one entity do not shift any other's.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b) {
    SplitMix64 sm(seed);
    std::uint64_t h = sm.next();
    h ^= 0x9e3779b97f4a7c15ULL + key_a + (h << 6) + (h >> 2);
    h = SplitMix64(h).next();
    h ^= 0x9e3779b97f4a7c15ULL + key_b + (h << 6) + (h >> 2);
    return SplitMix64(h).next();
}

}  // namespace rfl
