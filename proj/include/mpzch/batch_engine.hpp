#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpzch/eviction.hpp"
#include "mpzch/ids.hpp"
#include "mpzch/table.hpp"

namespace mpzch {

struct BatchEntry {
    Id id = 0;
    FeatureOrdinal feature = 0;

    bool operator==(const BatchEntry&) const = default;
};

// One training batch: raw (possibly duplicate-bearing) entries sharing a
// single timestamp.
struct IdBatch {
    std::vector<BatchEntry> ids;
    Timestamp now = 0;
};

struct DedupResult {
    std::vector<BatchEntry> uniques;     // first-occurrence order
    std::vector<std::uint32_t> inverse;  // inverse[i] indexes uniques
};

// First-occurrence dedup keyed on (id, feature). Rejects invalid IDs,
// naming the offending batch position. Batches are capped at 2^32 - 1
// positions.
DedupResult dedup(std::span<const BatchEntry> entries);

enum class ExecMode { Serial, Parallel };

// Dedup, partition by owning shard, probe each shard's uniques in dedup
// order, and scatter results back to input positions. Duplicate positions
// share the result of the single probe performed for their key. Shards run
// concurrently under Parallel; the two modes are bit-identical because
// per-shard operation order never depends on the schedule.
std::vector<ProbeResult> process_batch(MpzchTable& table, const IdBatch& batch,
                                       const EvictionPolicy& policy,
                                       ExecMode mode = ExecMode::Parallel);

}  // namespace mpzch
