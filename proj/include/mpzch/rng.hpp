#pragma once

#include <cstdint>

#include "mpzch/ids.hpp"

namespace mpzch {

// splitmix64: the usual seeding/stream generator.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // [0, 1) with 53 random bits
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // unbiased enough for workload sampling
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

private:
    std::uint64_t state_;
};

// Seeded stream of pairwise-distinct 63-bit IDs: a 4-round Feistel bijection
// over [0, 2^62) applied to consecutive indices. Stateless per index, so it
// scales to any count without tracking what was already drawn.
class DistinctIdStream {
public:
    explicit DistinctIdStream(std::uint64_t seed) : seed_(seed) {}

    Id at(std::uint64_t index) const {
        constexpr std::uint64_t kHalfMask = (1ull << 31) - 1;
        std::uint64_t left = (index >> 31) & kHalfMask;
        std::uint64_t right = index & kHalfMask;
        for (std::uint64_t round = 0; round < 4; ++round) {
            std::uint64_t f = mix64(right | (round << 32), seed_) & kHalfMask;
            std::uint64_t next_right = left ^ f;
            left = right;
            right = next_right;
        }
        return (left << 31) | right;  // < 2^62, never the empty sentinel
    }

    Id next() { return at(index_++); }

private:
    std::uint64_t seed_;
    std::uint64_t index_ = 0;
};

}  // namespace mpzch
