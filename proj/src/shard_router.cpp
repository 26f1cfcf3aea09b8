#include "mpzch/shard_router.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpzch {

TableLayout TableLayout::with_capacities(std::vector<std::uint64_t> capacities,
                                         std::uint64_t seed) {
    if (capacities.empty()) {
        throw std::invalid_argument("layout needs at least one shard");
    }
    TableLayout layout;
    layout.seed = seed;
    layout.shard_offsets.reserve(capacities.size() + 1);
    layout.shard_offsets.push_back(0);
    for (std::uint64_t capacity : capacities) {
        if (capacity == 0) {
            throw std::invalid_argument("shard capacity must be >= 1");
        }
        layout.shard_offsets.push_back(layout.shard_offsets.back() + capacity);
    }
    layout.shard_capacities = std::move(capacities);
    return layout;
}

TableLayout TableLayout::even(std::uint64_t total_rows, std::uint32_t num_shards,
                              std::uint64_t seed) {
    if (num_shards == 0) {
        throw std::invalid_argument("layout needs at least one shard");
    }
    if (total_rows < num_shards) {
        throw std::invalid_argument("fewer rows than shards");
    }
    std::vector<std::uint64_t> capacities(num_shards, total_rows / num_shards);
    for (std::uint64_t s = 0; s < total_rows % num_shards; ++s) {
        ++capacities[s];
    }
    return with_capacities(std::move(capacities), seed);
}

std::uint32_t shard_of(Id id, const TableLayout& layout) {
    require_valid_id(id);
    return static_cast<std::uint32_t>(mix64(id ^ kShardSalt, layout.seed) %
                                      layout.num_shards());
}

std::uint64_t to_global(std::uint32_t shard, SlotIndex local_slot,
                        const TableLayout& layout) {
    if (shard >= layout.num_shards()) {
        throw std::out_of_range("shard ordinal out of range");
    }
    if (local_slot >= layout.shard_capacities[shard]) {
        throw std::out_of_range("local slot exceeds shard capacity");
    }
    return layout.shard_offsets[shard] + local_slot;
}

std::pair<std::uint32_t, SlotIndex> from_global(std::uint64_t global_row,
                                                const TableLayout& layout) {
    if (global_row >= layout.total_rows()) {
        throw std::out_of_range("global row out of range");
    }
    auto it = std::upper_bound(layout.shard_offsets.begin(), layout.shard_offsets.end(),
                               global_row);
    auto shard = static_cast<std::uint32_t>(it - layout.shard_offsets.begin() - 1);
    return {shard, global_row - layout.shard_offsets[shard]};
}

}  // namespace mpzch
