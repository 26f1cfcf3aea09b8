#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>

#include "mpzch/ids.hpp"

namespace mpzch {

// TTL eviction settings. Durations are seconds and strictly positive;
// features without an explicit entry fall back to default_ttl_seconds.
struct TtlPolicy {
    std::uint64_t default_ttl_seconds = 259200;  // three days
    std::unordered_map<FeatureOrdinal, std::uint64_t> per_feature_ttl;

    std::uint64_t ttl_for(FeatureOrdinal feature) const {
        auto it = per_feature_ttl.find(feature);
        return it != per_feature_ttl.end() ? it->second : default_ttl_seconds;
    }

    void validate() const;
};

enum class EvictionMode { Disabled, Ttl, Lru };

class EvictionPolicy {
public:
    static EvictionPolicy disabled() { return EvictionPolicy(EvictionMode::Disabled, {}); }
    static EvictionPolicy lru() { return EvictionPolicy(EvictionMode::Lru, {}); }
    static EvictionPolicy ttl(TtlPolicy cfg) {
        cfg.validate();
        return EvictionPolicy(EvictionMode::Ttl, std::move(cfg));
    }

    EvictionMode mode() const { return mode_; }
    const TtlPolicy& ttl_config() const { return ttl_; }

private:
    EvictionPolicy(EvictionMode mode, TtlPolicy ttl) : mode_(mode), ttl_(std::move(ttl)) {}

    EvictionMode mode_;
    TtlPolicy ttl_;
};

// Metadata value for the slot an ID is about to occupy or refresh.
// TTL mode stores the expiry instant, LRU (and Disabled, where the value is
// informational only) store the access instant.
std::uint64_t make_metadata(const EvictionPolicy& policy, Timestamp now,
                            FeatureOrdinal feature);

// TTL expiry test: a stored expiry strictly below the current time is dead.
inline bool is_expired(std::uint64_t stored, Timestamp now) { return stored < now; }

struct WindowEntry {
    SlotIndex slot;
    Id identity;
    std::uint64_t stored;
};

// LRU victim over a probe window given in probe-offset order: the entry
// with the oldest timestamp, ties broken by the lowest offset. The window
// must be nonempty and fully occupied by foreign IDs.
SlotIndex select_victim_lru(std::span<const WindowEntry> window);

}  // namespace mpzch
