#include "mpzch/batch_engine.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "mpzch/prefetch.hpp"

namespace mpzch {

namespace {

// Open-addressed (id, feature) -> unique-index map. The dedup pass
// dominates batched throughput, so slots carry a batch epoch instead of
// being wiped between batches and the backing arrays grow monotonically.
class DedupMap {
public:
    void begin_batch(std::size_t expected) {
        std::size_t cap = slots_.empty() ? 16 : slots_.size();
        while (cap < expected * 2) cap <<= 1;
        if (cap != slots_.size()) {
            slots_.assign(cap, Slot{});
            epochs_.assign(cap, 0);
            epoch_ = 0;
        }
        mask_ = cap - 1;
        if (++epoch_ == 0) {
            std::fill(epochs_.begin(), epochs_.end(), 0);
            epoch_ = 1;
        }
    }

    std::uint64_t hash_of(BatchEntry key) const {
        return mix64(key.id ^ (static_cast<std::uint64_t>(key.feature) << 32), 0) & mask_;
    }

    void prefetch(std::uint64_t hash) const {
        prefetch_write(&epochs_[hash]);
        prefetch_write(&slots_[hash]);
    }

    // Existing value for the key, or fresh after inserting it. hash must be
    // hash_of(key) for the current batch.
    std::uint32_t find_or_insert(std::uint64_t hash, BatchEntry key, std::uint32_t fresh,
                                 bool& was_dup) {
        std::uint64_t h = hash;
        while (true) {
            if (epochs_[h] != epoch_) {
                epochs_[h] = epoch_;
                slots_[h] = Slot{key.id, key.feature, fresh};
                was_dup = false;
                return fresh;
            }
            const Slot& s = slots_[h];
            if (s.id == key.id && s.feature == key.feature) {
                was_dup = true;
                return s.value;
            }
            h = (h + 1) & mask_;
        }
    }

private:
    struct Slot {
        Id id = 0;
        FeatureOrdinal feature = 0;
        std::uint32_t value = 0;
    };

    std::vector<Slot> slots_;
    std::vector<std::uint32_t> epochs_;
    std::uint32_t epoch_ = 0;
    std::uint64_t mask_ = 0;
};

// Fills uniques[0, count) and inverse, returning count. uniques and hashes
// are left at their high-water sizes so hot callers never shrink-grow them.
std::size_t dedup_into(std::span<const BatchEntry> entries, DedupMap& map,
                       std::vector<std::uint64_t>& hashes, std::vector<BatchEntry>& uniques,
                       std::vector<std::uint32_t>& inverse) {
    if (entries.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::length_error("batch exceeds 2^32 - 1 positions");
    map.begin_batch(entries.size());
    if (uniques.size() < entries.size()) uniques.resize(entries.size());
    if (hashes.size() < entries.size()) hashes.resize(entries.size());
    inverse.resize(entries.size());
    // Validation and hashing run as their own pass so nothing below can
    // throw and the probe loop stays a pure map walk.
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!is_valid_id(entries[i].id))
            throw std::invalid_argument("invalid id at batch position " + std::to_string(i));
        hashes[i] = map.hash_of(entries[i]);
    }
    BatchEntry* const uniq = uniques.data();
    std::uint32_t count = 0;
    // The probe is latency-bound on the slot load; prefetching a few
    // entries ahead keeps upcoming slots streaming into cache.
    constexpr std::size_t kAhead = 16;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i + kAhead < entries.size()) map.prefetch(hashes[i + kAhead]);
        bool was_dup = false;
        const std::uint32_t u = map.find_or_insert(hashes[i], entries[i], count, was_dup);
        if (!was_dup) uniq[count++] = entries[i];
        inverse[i] = u;
    }
    return count;
}

// Per-thread reusable buffers: batch working sets are proportional to batch
// size, so the allocations are paid once per thread, not once per batch.
struct BatchScratch {
    DedupMap map;
    std::vector<std::uint64_t> hashes;
    std::vector<BatchEntry> uniques;
    std::vector<std::uint32_t> inverse;
    std::vector<std::uint64_t> metas;
    std::vector<std::uint64_t> shard_begin;
    std::vector<std::uint64_t> cursor;
    std::vector<Id> shard_ids;
    std::vector<std::uint64_t> shard_metas;
    std::vector<std::uint32_t> unique_to_pos;
    std::vector<ProbeResult> pos_results;
};

BatchScratch& scratch() {
    thread_local BatchScratch s;
    return s;
}

}  // namespace

DedupResult dedup(std::span<const BatchEntry> entries) {
    DedupResult out;
    BatchScratch& s = scratch();
    const std::size_t count = dedup_into(entries, s.map, s.hashes, out.uniques, out.inverse);
    out.uniques.resize(count);
    return out;
}

std::vector<ProbeResult> process_batch(MpzchTable& table, const IdBatch& batch,
                                       const EvictionPolicy& policy, ExecMode mode) {
    if (table.frozen())
        throw std::logic_error("table is frozen; training mutations are not allowed");

    // Everything that can throw happens before the first table mutation and
    // before the parallel region: the region itself must not unwind.
    BatchScratch& s = scratch();
    const std::size_t uniques = dedup_into(batch.ids, s.map, s.hashes, s.uniques, s.inverse);

    // Only TTL metadata varies by feature; LRU and disabled metadata is the
    // shared access instant.
    const bool ttl_mode = policy.mode() == EvictionMode::Ttl;
    if (ttl_mode) {
        s.metas.resize(uniques);
        for (std::size_t u = 0; u < uniques; ++u)
            s.metas[u] = make_metadata(policy, batch.now, s.uniques[u].feature);
    }

    // Stable counting sort by owning shard: every shard probes its uniques
    // in dedup order, and the kernel receives contiguous spans.
    const TableLayout& layout = table.layout();
    const std::uint32_t num_shards = layout.num_shards();
    s.shard_begin.assign(num_shards + 1, 0);
    s.unique_to_pos.resize(uniques);
    for (std::size_t u = 0; u < uniques; ++u) {
        const std::uint32_t shard = shard_of(s.uniques[u].id, layout);
        s.unique_to_pos[u] = shard;  // shard id until the stable fill below
        ++s.shard_begin[shard + 1];
    }
    for (std::uint32_t shard = 0; shard < num_shards; ++shard)
        s.shard_begin[shard + 1] += s.shard_begin[shard];
    s.cursor.assign(s.shard_begin.begin(), s.shard_begin.end() - 1);
    s.shard_ids.resize(uniques);
    s.shard_metas.resize(uniques);
    s.pos_results.resize(uniques);
    if (ttl_mode) {
        for (std::size_t u = 0; u < uniques; ++u) {
            const std::uint64_t pos = s.cursor[s.unique_to_pos[u]]++;
            s.shard_ids[pos] = s.uniques[u].id;
            s.shard_metas[pos] = s.metas[u];
            s.unique_to_pos[u] = static_cast<std::uint32_t>(pos);
        }
    } else {
        std::fill(s.shard_metas.begin(), s.shard_metas.end(), batch.now);
        for (std::size_t u = 0; u < uniques; ++u) {
            const std::uint64_t pos = s.cursor[s.unique_to_pos[u]]++;
            s.shard_ids[pos] = s.uniques[u].id;
            s.unique_to_pos[u] = static_cast<std::uint32_t>(pos);
        }
    }

    auto run_shard = [&](std::uint32_t shard) {
        const std::uint64_t lo = s.shard_begin[shard];
        const std::uint64_t n = s.shard_begin[shard + 1] - lo;
        if (n == 0) return;
        table.process_shard_batch(
            shard, std::span<const Id>(s.shard_ids.data() + lo, n),
            std::span<const std::uint64_t>(s.shard_metas.data() + lo, n), batch.now, policy,
            std::span<ProbeResult>(s.pos_results.data() + lo, n));
    };

    if (mode == ExecMode::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (std::int64_t shard = 0; shard < static_cast<std::int64_t>(num_shards); ++shard)
            run_shard(static_cast<std::uint32_t>(shard));
    } else {
        for (std::uint32_t shard = 0; shard < num_shards; ++shard) run_shard(shard);
    }

    constexpr std::size_t kAhead = 16;
    std::vector<ProbeResult> out(batch.ids.size());
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        if (i + kAhead < batch.ids.size())
            prefetch_read(&s.pos_results[s.unique_to_pos[s.inverse[i + kAhead]]]);
        out[i] = s.pos_results[s.unique_to_pos[s.inverse[i]]];
    }
    return out;
}

}  // namespace mpzch
