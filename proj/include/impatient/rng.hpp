#pragma once

#include <cstdint>

namespace impatient {

// 64-bit finalizer used for stream derivation (splitmix64 mixer).
inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-based generator (splitmix64): the state advances by a fixed
// increment, so the k-th output is a pure function of (seed, k).
class Rng {
public:
    explicit Rng(uint64_t stream = 0) : state_(stream) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    uint64_t state_;
};

// Sub-stream derivation: seed ^ mix64(index). Episode streams, policy
// streams, and per-gamma streams are all carved out this way so results
// do not depend on execution order.
inline uint64_t derive_stream(uint64_t seed, uint64_t index) {
    return mix64(seed ^ mix64(index));
}

}  // namespace impatient
