#pragma once

#include <cstdint>
#include <stdexcept>

namespace mpzch {

// IDs are non-negative 63-bit integers. The all-ones 64-bit pattern is the
// empty-slot sentinel (a two's-complement -1), so it can never collide with
// a valid ID.
using Id = std::uint64_t;
using SlotIndex = std::uint64_t;
using Timestamp = std::uint64_t;  // seconds, always supplied by the caller
using FeatureOrdinal = std::uint32_t;

inline constexpr Id kEmptySlot = ~std::uint64_t{0};

// Distinct salts decorrelate the different hash uses of the same ID
// (shard routing vs. home-slot placement within a shard).
inline constexpr std::uint64_t kHomeSalt = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kShardSalt = 0xD1B54A32D192ED03ull;

constexpr bool is_valid_id(Id id) { return (id >> 63) == 0; }

inline void require_valid_id(Id id) {
    if (!is_valid_id(id)) {
        throw std::invalid_argument(
            id == kEmptySlot ? "id is the empty-slot sentinel"
                             : "id exceeds the 63-bit ID space");
    }
}

// 64-bit xor-shift-multiply finalizer. Constants are pinned so every build
// produces bit-identical hashes.
constexpr std::uint64_t mix64(std::uint64_t id, std::uint64_t seed) {
    std::uint64_t x = id ^ seed;
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

}  // namespace mpzch
