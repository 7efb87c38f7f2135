#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "spurlex/error.hpp"

namespace spurlex {

/// Deterministic pseudo-random generator (splitmix64).
///
/// All randomized operations in the library draw from this generator rather
/// than <random>, because the standard distributions are implementation
/// defined and would break byte-for-byte reproducibility across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, n). n must be positive.
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) throw Error("uniform_index: empty range");
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform_real() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (cosine branch only, so the stream
    /// stays a pure function of the call sequence).
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform_real();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.141592653589793 * u2);
    }

private:
    uint64_t seed_;
    uint64_t state_;
};

/// Stable 64-bit mix of two values, used to derive per-sample / per-epoch
/// generator seeds from a single run seed.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

/// FNV-1a 64-bit hash; fixed algorithm so token bucketing is portable.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace spurlex
