#pragma once

#include <cstdint>
#include <vector>

#include "mpzch/eviction.hpp"
#include "mpzch/ids.hpp"

namespace mpzch {

struct ShardConfig {
    std::uint64_t capacity = 0;
    std::uint32_t max_probe = 0;  // probe window length P
    std::uint32_t shard_id = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-slot owner IDs. Freshly constructed arrays are all empty.
class IdentityArray {
public:
    IdentityArray() = default;
    explicit IdentityArray(std::uint64_t capacity) : entries_(capacity, kEmptySlot) {}

    std::uint64_t size() const { return entries_.size(); }
    Id operator[](SlotIndex slot) const { return entries_[slot]; }
    Id& operator[](SlotIndex slot) { return entries_[slot]; }
    const Id* data() const { return entries_.data(); }
    Id* data() { return entries_.data(); }

    bool operator==(const IdentityArray&) const = default;

private:
    std::vector<Id> entries_;
};

// Per-slot freshness values, paired 1:1 with an IdentityArray. TTL mode
// stores expiry instants, LRU mode last-access instants; entries under an
// empty identity carry no meaning.
class MetadataArray {
public:
    MetadataArray() = default;
    explicit MetadataArray(std::uint64_t capacity) : entries_(capacity, 0) {}

    std::uint64_t size() const { return entries_.size(); }
    std::uint64_t operator[](SlotIndex slot) const { return entries_[slot]; }
    std::uint64_t& operator[](SlotIndex slot) { return entries_[slot]; }

    bool operator==(const MetadataArray&) const = default;

private:
    std::vector<std::uint64_t> entries_;
};

enum class Outcome : std::uint8_t { Found, Inserted, Evicted, Collision };

const char* to_string(Outcome outcome);

struct ProbeResult {
    SlotIndex slot = 0;
    bool evicted = false;  // true iff outcome == Evicted
    Outcome outcome = Outcome::Found;

    bool operator==(const ProbeResult&) const = default;
};

// Initial slot for an ID: hash of the salted ID reduced modulo capacity.
SlotIndex home_slot(Id id, const ShardConfig& cfg);

// Scan the probe window for an existing entry. Never writes; misses fall
// back to the home slot with a Collision outcome.
ProbeResult lookup_readonly(Id id, const IdentityArray& identities,
                            const ShardConfig& cfg);

// Two-pass lookup/insert/evict for a single ID. Pass 1 only discovers
// whether the ID is already stored; pass 2 updates, inserts into the first
// empty slot, or reclaims a victim per the eviction policy. A full window
// without a victim falls back to the home slot (Collision), refreshing its
// metadata. meta_in must come from make_metadata for the active policy.
ProbeResult lookup_or_insert(Id id, std::uint64_t meta_in, Timestamp now,
                             IdentityArray& identities, MetadataArray& metadata,
                             const ShardConfig& cfg, const EvictionPolicy& policy);

// Variant for batch callers that hoist the hash: home must equal
// home_slot(id, cfg).
ProbeResult lookup_or_insert(Id id, std::uint64_t meta_in, Timestamp now,
                             IdentityArray& identities, MetadataArray& metadata,
                             const ShardConfig& cfg, const EvictionPolicy& policy,
                             SlotIndex home);

}  // namespace mpzch
