#include "mpzch/eviction.hpp"

#include <limits>
#include <stdexcept>

namespace mpzch {

void TtlPolicy::validate() const {
    if (default_ttl_seconds == 0) {
        throw std::invalid_argument("default TTL must be strictly positive");
    }
    for (const auto& [feature, ttl] : per_feature_ttl) {
        if (ttl == 0) {
            throw std::invalid_argument("per-feature TTL must be strictly positive (feature " +
                                        std::to_string(feature) + ")");
        }
    }
}

std::uint64_t make_metadata(const EvictionPolicy& policy, Timestamp now,
                            FeatureOrdinal feature) {
    if (policy.mode() != EvictionMode::Ttl) {
        return now;
    }
    const std::uint64_t ttl = policy.ttl_config().ttl_for(feature);
    if (ttl > std::numeric_limits<std::uint64_t>::max() - now) {
        throw std::overflow_error("TTL expiry overflows the 64-bit timestamp range");
    }
    return now + ttl;
}

SlotIndex select_victim_lru(std::span<const WindowEntry> window) {
    if (window.empty()) {
        throw std::invalid_argument("LRU victim selection over an empty window");
    }
    const WindowEntry* victim = &window[0];
    for (const WindowEntry& entry : window.subspan(1)) {
        if (entry.stored < victim->stored) {
            victim = &entry;
        }
    }
    return victim->slot;
}

}  // namespace mpzch
