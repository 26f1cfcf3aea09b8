#include "mpzch/table.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include "mpzch/prefetch.hpp"

namespace mpzch {

namespace {

std::uint64_t next_table_uid() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

TableConfig TableConfig::even(std::uint64_t total_rows, std::uint32_t num_shards,
                              std::uint32_t max_probe, std::uint64_t seed,
                              std::uint32_t dim, std::uint64_t init_seed) {
    TableConfig cfg;
    cfg.shard_capacities = TableLayout::even(total_rows, num_shards, seed).shard_capacities;
    cfg.max_probe = max_probe;
    cfg.seed = seed;
    cfg.dim = dim;
    cfg.init_seed = init_seed;
    return cfg;
}

MpzchTable::MpzchTable(TableConfig cfg)
    : layout_(TableLayout::with_capacities(cfg.shard_capacities, cfg.seed)),
      max_probe_(cfg.max_probe),
      dim_(cfg.dim),
      table_uid_(next_table_uid()),
      replica_lock_(std::make_unique<std::shared_mutex>()) {
    const std::uint32_t shards = layout_.num_shards();
    shard_configs_.reserve(shards);
    identities_.reserve(shards);
    metadata_.reserve(shards);
    for (std::uint32_t s = 0; s < shards; ++s) {
        const std::uint64_t cap = layout_.shard_capacities[s];
        ShardConfig sc{cap, max_probe_, s, layout_.seed};
        sc.validate();
        shard_configs_.push_back(sc);
        identities_.emplace_back(cap);
        metadata_.emplace_back(cap);
    }
    if (dim_ > 0) {
        embeddings_ = EmbeddingTable(layout_.total_rows(), dim_, RowInit{cfg.init_seed});
    }
    row_generation_.assign(layout_.total_rows(), 0);
}

MpzchTable MpzchTable::frozen_from_parts(TableLayout layout, std::uint32_t max_probe,
                                         std::vector<IdentityArray> identities,
                                         EmbeddingTable weights,
                                         std::uint32_t base_checksum) {
    if (identities.size() != layout.num_shards())
        throw std::invalid_argument("identity shard count does not match layout");
    for (std::uint32_t s = 0; s < layout.num_shards(); ++s) {
        if (identities[s].size() != layout.shard_capacities[s])
            throw std::invalid_argument("identity array size does not match shard capacity");
    }
    if (weights.rows() != layout.total_rows())
        throw std::invalid_argument("weight rows do not match layout");

    MpzchTable t;
    t.layout_ = std::move(layout);
    t.max_probe_ = max_probe;
    t.dim_ = weights.dim();
    t.identities_ = std::move(identities);
    t.embeddings_ = std::move(weights);
    t.table_uid_ = next_table_uid();
    t.frozen_ = true;
    t.base_checksum_ = base_checksum;
    t.next_sequence_ = 0;
    t.replica_lock_ = std::make_unique<std::shared_mutex>();
    for (std::uint32_t s = 0; s < t.layout_.num_shards(); ++s) {
        ShardConfig sc{t.layout_.shard_capacities[s], max_probe, s, t.layout_.seed};
        sc.validate();
        t.shard_configs_.push_back(sc);
    }
    return t;
}

void MpzchTable::check_mutable() const {
    if (frozen_) throw std::logic_error("table is frozen; training mutations are not allowed");
}

void MpzchTable::check_embeddings() const {
    if (dim_ == 0) throw std::logic_error("table has no embedding payload (dim = 0)");
}

ProbeResult MpzchTable::lookup_or_insert(Id id, FeatureOrdinal feature, Timestamp now,
                                         const EvictionPolicy& policy) {
    check_mutable();
    const std::uint32_t shard = shard_of(id, layout_);
    const std::uint64_t meta_in = make_metadata(policy, now, feature);
    const ProbeResult local = mpzch::lookup_or_insert(
        id, meta_in, now, identities_[shard], metadata_[shard], shard_configs_[shard], policy);
    const std::uint64_t global = to_global(shard, local.slot, layout_);
    if (local.outcome == Outcome::Evicted && dim_ > 0) embeddings_.reset_row(global);
    if (local.outcome == Outcome::Inserted || local.outcome == Outcome::Evicted)
        touch_row(global);
    return ProbeResult{global, local.evicted, local.outcome};
}

void MpzchTable::process_shard_batch(std::uint32_t shard, std::span<const Id> ids,
                                     std::span<const std::uint64_t> metas, Timestamp now,
                                     const EvictionPolicy& policy,
                                     std::span<ProbeResult> out) {
    check_mutable();
    if (shard >= num_shards()) throw std::out_of_range("shard index out of range");
    if (out.size() != ids.size() || metas.size() != ids.size())
        throw std::invalid_argument("batch spans disagree on length");
    IdentityArray& ids_arr = identities_[shard];
    MetadataArray& meta_arr = metadata_[shard];
    const ShardConfig& sc = shard_configs_[shard];
    const std::uint64_t base = layout_.shard_offsets[shard];

    // Probing is latency-bound on the home-slot load, so homes are hoisted
    // per chunk and upcoming slots are prefetched while earlier probes run.
    constexpr std::size_t kChunk = 256;
    constexpr std::size_t kAhead = 8;
    SlotIndex homes[kChunk];
    for (std::size_t lo = 0; lo < ids.size(); lo += kChunk) {
        const std::size_t n = std::min(kChunk, ids.size() - lo);
        for (std::size_t j = 0; j < n; ++j) homes[j] = home_slot(ids[lo + j], sc);
        for (std::size_t j = 0; j < n; ++j) {
            if (j + kAhead < n) {
                prefetch_write(&ids_arr[homes[j + kAhead]]);
                prefetch_write(&meta_arr[homes[j + kAhead]]);
            }
            const std::size_t k = lo + j;
            const ProbeResult local = mpzch::lookup_or_insert(ids[k], metas[k], now, ids_arr,
                                                              meta_arr, sc, policy, homes[j]);
            const std::uint64_t global = base + local.slot;
            if (local.outcome == Outcome::Evicted && dim_ > 0) embeddings_.reset_row(global);
            if (local.outcome == Outcome::Inserted || local.outcome == Outcome::Evicted)
                touch_row(global);
            out[k] = ProbeResult{global, local.evicted, local.outcome};
        }
    }
}

ProbeResult MpzchTable::lookup(Id id) const {
    std::shared_lock<std::shared_mutex> guard(*replica_lock_, std::defer_lock);
    if (frozen_) guard.lock();
    const std::uint32_t shard = shard_of(id, layout_);
    const ProbeResult local = lookup_readonly(id, identities_[shard], shard_configs_[shard]);
    return ProbeResult{to_global(shard, local.slot, layout_), local.evicted, local.outcome};
}

std::vector<float> MpzchTable::gather(std::span<const std::uint64_t> rows) const {
    check_embeddings();
    std::shared_lock<std::shared_mutex> guard(*replica_lock_, std::defer_lock);
    if (frozen_) guard.lock();
    return embeddings_.gather(rows);
}

std::pair<Id, std::vector<float>> MpzchTable::read_row(std::uint64_t global_row) const {
    check_embeddings();
    std::shared_lock<std::shared_mutex> guard(*replica_lock_, std::defer_lock);
    if (frozen_) guard.lock();
    const auto [shard, slot] = from_global(global_row, layout_);
    std::span<const float> w = embeddings_.row(global_row);
    return {identities_[shard].data()[slot], std::vector<float>(w.begin(), w.end())};
}

void MpzchTable::sgd_step(std::span<const std::uint64_t> rows, std::span<const float> grads,
                          float lr, float beta) {
    check_mutable();
    check_embeddings();
    embeddings_.sgd_step(rows, grads, lr, beta);
    for (std::uint64_t r : rows) touch_row(r);
}

void MpzchTable::reset_row(std::uint64_t global_row) {
    check_mutable();
    check_embeddings();
    embeddings_.reset_row(global_row);
    touch_row(global_row);
}

Id MpzchTable::row_identity(std::uint64_t global_row) const {
    const auto [shard, slot] = from_global(global_row, layout_);
    return identities_[shard].data()[slot];
}

bool MpzchTable::row_trained(std::uint64_t global_row) const {
    check_embeddings();
    return embeddings_.trained(global_row);
}

std::span<const float> MpzchTable::momentum_row(std::uint64_t global_row) const {
    check_embeddings();
    return embeddings_.momentum_row(global_row);
}

const IdentityArray& MpzchTable::identities(std::uint32_t shard) const {
    if (shard >= identities_.size()) throw std::out_of_range("shard index out of range");
    return identities_[shard];
}

const MetadataArray& MpzchTable::metadata(std::uint32_t shard) const {
    if (frozen_) throw std::logic_error("frozen tables carry no probe metadata");
    if (shard >= metadata_.size()) throw std::out_of_range("shard index out of range");
    return metadata_[shard];
}

const ShardConfig& MpzchTable::shard_config(std::uint32_t shard) const {
    if (shard >= shard_configs_.size()) throw std::out_of_range("shard index out of range");
    return shard_configs_[shard];
}

PublishCursor MpzchTable::make_cursor() {
    check_mutable();
    PublishCursor c{table_uid_, generation_clock_};
    ++generation_clock_;
    return c;
}

std::vector<std::uint64_t> MpzchTable::dirty_rows_since(const PublishCursor& cursor) const {
    check_mutable();
    if (cursor.table_uid != table_uid_ || cursor.generation == 0 ||
        cursor.generation >= generation_clock_)
        throw std::invalid_argument("stale or unknown publication cursor");
    std::vector<std::uint64_t> rows;
    for (std::uint64_t r = 0; r < row_generation_.size(); ++r) {
        if (row_generation_[r] > cursor.generation) rows.push_back(r);
    }
    return rows;
}

void MpzchTable::apply_replica_record(std::uint64_t global_row, Id identity,
                                      std::span<const float> weights) {
    if (!frozen_) throw std::logic_error("delta records apply only to frozen replicas");
    if (weights.size() != dim_) throw std::invalid_argument("delta record has wrong width");
    const auto [shard, slot] = from_global(global_row, layout_);
    std::unique_lock<std::shared_mutex> guard(*replica_lock_);
    identities_[shard].data()[slot] = identity;
    embeddings_.overwrite_row(global_row, weights);
}

bool MpzchTable::state_equals(const MpzchTable& other) const {
    if (layout_.shard_capacities != other.layout_.shard_capacities) return false;
    if (dim_ != other.dim_) return false;
    for (std::uint32_t s = 0; s < layout_.num_shards(); ++s) {
        if (!(identities_[s] == other.identities_[s])) return false;
    }
    if (dim_ == 0) return true;
    if (embeddings_.weights_count() != other.embeddings_.weights_count()) return false;
    return embeddings_.weights_count() == 0 ||
           std::memcmp(embeddings_.weights_data(), other.embeddings_.weights_data(),
                       embeddings_.weights_count() * sizeof(float)) == 0;
}

void MpzchTable::touch_row(std::uint64_t global_row) {
    row_generation_[global_row] = generation_clock_;
}

}  // namespace mpzch
