#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Seedable, splittable PRNG used everywhere randomness is needed.
// The generator is pinned so that datasets, schedules and training runs are
// reproducible across platforms: xoshiro256** for the stream, seeded from
// SplitMix64. Golden vectors for both live in the test suite.
namespace otom {

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output function. Also used as a stateless mixer for deriving
// per-record / per-pixel seeds from a base seed and an index.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (base, index). Deterministic and
// collision-resistant for the index counts used here.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return mix64(base + kSplitMixGamma * (index + 1));
}

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kSplitMixGamma;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : state_) s = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto count = static_cast<double>(hi - lo + 1);
        auto k = static_cast<std::int64_t>(uniform() * count);
        if (k > hi - lo) k = hi - lo;
        return lo + k;
    }

    // Standard normal via Box-Muller; consumes two uniforms per draw so the
    // stream position does not depend on caller history.
    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace otom
