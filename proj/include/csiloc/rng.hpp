#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace csiloc {

// All randomness in the library flows through this generator so results are
// reproducible independent of the platform's <random> distributions.

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags
/// (purpose ids, indices). Same inputs always give the same seed.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags) {
    uint64_t s = base ^ 0xd6e8feb86659fd93ull;
    uint64_t h = splitmix64(s);
    for (uint64_t t : tags) {
        s ^= t + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h = splitmix64(s);
    }
    return h;
}

/// xoshiro256++ with splitmix64 seeding.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    /// Uniform integer in [0, n), n > 0, rejection-sampled to avoid modulo bias.
    uint64_t uniform_int(uint64_t n) {
        const uint64_t limit = ~uint64_t{0} - ~uint64_t{0} % n;
        uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % n;
    }

    /// Standard normal via Box-Muller (no spare caching; two uniforms per draw).
    double normal() {
        const double u1 = 1.0 - u01();  // (0, 1], keeps log finite
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
};

}  // namespace csiloc
