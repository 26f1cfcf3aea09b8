#pragma once

// Naive reference for the two-pass probe, written straight from the
// pseudocode on its own: own mixer copy, own sentinel, plain vectors,
// modulo indexing. Deliberately shares no helpers with the library so the
// differential test compares two independent derivations.

#include <cstdint>
#include <vector>

namespace naive {

inline constexpr std::uint64_t kEmpty = 0xFFFFFFFFFFFFFFFFull;

enum class Mode { Disabled, Ttl, Lru };

enum class Outcome { Found, Inserted, Evicted, Collision };

struct Result {
    std::uint64_t slot = 0;
    bool evicted = false;
    Outcome outcome = Outcome::Found;

    bool operator==(const Result&) const = default;
};

inline std::uint64_t mixer(std::uint64_t x, std::uint64_t seed) {
    x ^= seed;
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

inline std::uint64_t home(std::uint64_t id, std::uint64_t seed, std::uint64_t capacity) {
    return mixer(id ^ 0x9E3779B97F4A7C15ull, seed) % capacity;
}

inline Result lookup_or_insert(std::uint64_t id, std::uint64_t meta_in, std::uint64_t now,
                               std::vector<std::uint64_t>& identities,
                               std::vector<std::uint64_t>& metadata,
                               std::uint64_t capacity, std::uint32_t max_probe,
                               std::uint64_t seed, Mode mode) {
    const std::uint64_t h = home(id, seed, capacity);

    // pass 1: discovery
    bool exists = false;
    for (std::uint32_t i = 0; i < max_probe; ++i) {
        if (identities[(h + i) % capacity] == id) {
            exists = true;
            break;
        }
    }

    // pass 2: action
    std::vector<std::pair<std::uint64_t, std::uint64_t>> lru_window;  // (slot, stored)
    for (std::uint32_t i = 0; i < max_probe; ++i) {
        const std::uint64_t slot = (h + i) % capacity;
        const std::uint64_t occupant = identities[slot];
        if (occupant == id) {
            metadata[slot] = meta_in;
            return {slot, false, Outcome::Found};
        }
        if (occupant == kEmpty) {
            identities[slot] = id;
            metadata[slot] = meta_in;
            return {slot, false, Outcome::Inserted};
        }
        if (!exists && mode == Mode::Ttl && metadata[slot] < now) {
            identities[slot] = id;
            metadata[slot] = meta_in;
            return {slot, true, Outcome::Evicted};
        }
        if (!exists && mode == Mode::Lru) lru_window.push_back({slot, metadata[slot]});
    }

    if (mode == Mode::Lru && !lru_window.empty()) {
        std::uint64_t victim = lru_window[0].first;
        std::uint64_t oldest = lru_window[0].second;
        for (const auto& [slot, stored] : lru_window) {
            if (stored < oldest) {
                victim = slot;
                oldest = stored;
            }
        }
        identities[victim] = id;
        metadata[victim] = meta_in;
        return {victim, true, Outcome::Evicted};
    }

    metadata[h] = meta_in;
    return {h, false, Outcome::Collision};
}

}  // namespace naive
