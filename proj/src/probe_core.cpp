#include "mpzch/probe_core.hpp"

#include <stdexcept>
#include <string>

namespace mpzch {

void ShardConfig::validate() const {
    if (capacity < 1) {
        throw std::invalid_argument("shard capacity must be >= 1");
    }
    if (max_probe < 1 || max_probe > capacity) {
        throw std::invalid_argument("max_probe must satisfy 1 <= max_probe <= capacity");
    }
}

const char* to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Found: return "found";
        case Outcome::Inserted: return "inserted";
        case Outcome::Evicted: return "evicted";
        case Outcome::Collision: return "collision";
    }
    return "unknown";
}

SlotIndex home_slot(Id id, const ShardConfig& cfg) {
    require_valid_id(id);
    return mix64(id ^ kHomeSalt, cfg.seed) % cfg.capacity;
}

ProbeResult lookup_readonly(Id id, const IdentityArray& identities,
                            const ShardConfig& cfg) {
    const SlotIndex home = home_slot(id, cfg);
    SlotIndex slot = home;
    for (std::uint32_t i = 0; i < cfg.max_probe; ++i) {
        if (identities[slot] == id) {
            return {slot, false, Outcome::Found};
        }
        if (++slot == cfg.capacity) slot = 0;
    }
    return {home, false, Outcome::Collision};
}

namespace {

// meta_in must be the value make_metadata produces for this policy: an
// expiry strictly past `now` under TTL, exactly `now` otherwise.
void check_metadata_input(const EvictionPolicy& policy, std::uint64_t meta_in,
                          Timestamp now) {
    if (policy.mode() == EvictionMode::Ttl) {
        if (meta_in <= now) {
            throw std::invalid_argument("TTL metadata must be an expiry in the future");
        }
    } else if (meta_in != now) {
        throw std::invalid_argument("non-TTL metadata must equal the current timestamp");
    }
}

}  // namespace

ProbeResult lookup_or_insert(Id id, std::uint64_t meta_in, Timestamp now,
                             IdentityArray& identities, MetadataArray& metadata,
                             const ShardConfig& cfg, const EvictionPolicy& policy) {
    return lookup_or_insert(id, meta_in, now, identities, metadata, cfg, policy,
                            home_slot(id, cfg));
}

ProbeResult lookup_or_insert(Id id, std::uint64_t meta_in, Timestamp now,
                             IdentityArray& identities, MetadataArray& metadata,
                             const ShardConfig& cfg, const EvictionPolicy& policy,
                             SlotIndex home) {
    require_valid_id(id);
    check_metadata_input(policy, meta_in, now);

    // Pass 1: discovery only. Knowing whether the ID already lives in the
    // window keeps pass 2 from evicting a stale slot ahead of it.
    bool exists = false;
    SlotIndex slot = home;
    for (std::uint32_t i = 0; i < cfg.max_probe; ++i) {
        if (identities[slot] == id) {
            exists = true;
            break;
        }
        if (++slot == cfg.capacity) slot = 0;
    }

    // Pass 2: update, insert, or evict.
    const bool ttl_mode = policy.mode() == EvictionMode::Ttl;
    const bool lru_mode = policy.mode() == EvictionMode::Lru;
    bool have_lru_victim = false;
    SlotIndex lru_victim_slot = 0;
    std::uint64_t lru_victim_stored = 0;

    slot = home;
    for (std::uint32_t i = 0; i < cfg.max_probe; ++i) {
        const Id occupant = identities[slot];
        if (occupant == id) {
            metadata[slot] = meta_in;  // refresh
            return {slot, false, Outcome::Found};
        }
        if (occupant == kEmptySlot) {
            identities[slot] = id;
            metadata[slot] = meta_in;
            return {slot, false, Outcome::Inserted};
        }
        if (!exists) {
            if (ttl_mode && is_expired(metadata[slot], now)) {
                // first expired slot in the window is reclaimed
                identities[slot] = id;
                metadata[slot] = meta_in;
                return {slot, true, Outcome::Evicted};
            }
            if (lru_mode && (!have_lru_victim || metadata[slot] < lru_victim_stored)) {
                have_lru_victim = true;
                lru_victim_slot = slot;
                lru_victim_stored = metadata[slot];
            }
        }
        if (++slot == cfg.capacity) slot = 0;
    }

    // LRU never falls through to a collision: a full foreign window always
    // gives up its oldest entry.
    if (lru_mode && have_lru_victim) {
        identities[lru_victim_slot] = id;
        metadata[lru_victim_slot] = meta_in;
        return {lru_victim_slot, true, Outcome::Evicted};
    }

    // Collision fallback: share the home slot and refresh its metadata.
    metadata[home] = meta_in;
    return {home, false, Outcome::Collision};
}

}  // namespace mpzch
