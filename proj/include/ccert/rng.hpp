#pragma once

// Deterministic, platform-independent PRNG used for every piece of sampling
// in the toolkit (region sampling, CEGIS, pre-screening, tests).
//
// Algorithm: splitmix64 (Steele/Lea/Vigna). State advances by the golden-gamma
// constant; output is the finalizer mix. Byte-exact across platforms, which is
// what makes seeded runs reproducible everywhere.

#include <cstdint>

namespace ccert {

class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed = 0) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1): top 53 bits scaled by 2^-53.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, bound); bound > 0. Slight modulo bias is
    // irrelevant for sampling purposes here and keeps the stream simple.
    uint64_t below(uint64_t bound) { return next() % bound; }

    // Derive an independent stream; used to give each sample set / condition
    // its own substream so insertion order can't perturb unrelated draws.
    SplitMix64 fork(uint64_t salt) {
        SplitMix64 child(next() ^ (0xd1b54a32d192ed03ULL * (salt + 1)));
        return child;
    }

private:
    uint64_t state_;
};

} // namespace ccert
