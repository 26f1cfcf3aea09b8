#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mpzch/ids.hpp"

namespace mpzch {

// Row-wise partition of the table. Shard s owns the global row range
// [shard_offsets[s], shard_offsets[s+1]); capacities may differ per shard.
struct TableLayout {
    std::vector<std::uint64_t> shard_capacities;
    std::vector<std::uint64_t> shard_offsets;  // exclusive prefix sums, num_shards + 1 entries
    std::uint64_t seed = 0;

    static TableLayout with_capacities(std::vector<std::uint64_t> capacities,
                                       std::uint64_t seed);
    // total_rows split as evenly as possible; the first (total % n) shards
    // take one extra row
    static TableLayout even(std::uint64_t total_rows, std::uint32_t num_shards,
                            std::uint64_t seed);

    std::uint32_t num_shards() const {
        return static_cast<std::uint32_t>(shard_capacities.size());
    }
    std::uint64_t total_rows() const { return shard_offsets.back(); }
};

std::uint32_t shard_of(Id id, const TableLayout& layout);

std::uint64_t to_global(std::uint32_t shard, SlotIndex local_slot,
                        const TableLayout& layout);

// inverse of to_global
std::pair<std::uint32_t, SlotIndex> from_global(std::uint64_t global_row,
                                                const TableLayout& layout);

}  // namespace mpzch
