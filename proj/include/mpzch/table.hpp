#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <utility>
#include <vector>

#include "mpzch/embedding_store.hpp"
#include "mpzch/eviction.hpp"
#include "mpzch/ids.hpp"
#include "mpzch/probe_core.hpp"
#include "mpzch/shard_router.hpp"

namespace mpzch {

struct TableConfig {
    std::vector<std::uint64_t> shard_capacities;
    std::uint32_t max_probe = 1;
    std::uint64_t seed = 0;
    std::uint32_t dim = 0;  // 0 = index-only table, no embedding payload
    std::uint64_t init_seed = 0;

    static TableConfig even(std::uint64_t total_rows, std::uint32_t num_shards,
                            std::uint32_t max_probe, std::uint64_t seed,
                            std::uint32_t dim = 0, std::uint64_t init_seed = 0);
};

// Opaque handle marking a point in a table's mutation history; dirty-row
// queries are made relative to a cursor.
struct PublishCursor {
    std::uint64_t table_uid = 0;
    std::uint64_t generation = 0;
};

// Sharded MPZCH table: co-sharded identity/metadata arrays plus (optionally)
// the embedding rows they index. Mutations on a live table must be
// externally serialized; a frozen table (loaded from a snapshot) accepts
// only read-only lookups, gathers, and replica delta application.
class MpzchTable {
public:
    explicit MpzchTable(TableConfig cfg);

    static MpzchTable frozen_from_parts(TableLayout layout, std::uint32_t max_probe,
                                        std::vector<IdentityArray> identities,
                                        EmbeddingTable weights,
                                        std::uint32_t base_checksum);

    const TableLayout& layout() const { return layout_; }
    std::uint32_t max_probe() const { return max_probe_; }
    std::uint32_t dim() const { return dim_; }
    std::uint64_t total_rows() const { return layout_.total_rows(); }
    std::uint32_t num_shards() const { return layout_.num_shards(); }
    bool frozen() const { return frozen_; }
    bool has_embeddings() const { return dim_ > 0; }

    // Training path: route to the owning shard, probe, and couple any
    // eviction to a reset of the reclaimed row. The returned slot is a
    // global row index.
    ProbeResult lookup_or_insert(Id id, FeatureOrdinal feature, Timestamp now,
                                 const EvictionPolicy& policy);

    // Read-only path; the only lookup a frozen table accepts.
    ProbeResult lookup(Id id) const;

    // Serialized probe sequence for one shard, used by the batch engine.
    // ids must all route to `shard`, metas pair 1:1 with ids, and results
    // land in out (global rows). Distinct shards touch disjoint state, so
    // concurrent calls on different shards are safe.
    void process_shard_batch(std::uint32_t shard, std::span<const Id> ids,
                             std::span<const std::uint64_t> metas, Timestamp now,
                             const EvictionPolicy& policy, std::span<ProbeResult> out);

    std::vector<float> gather(std::span<const std::uint64_t> rows) const;

    // identity and weights of one row, read as a consistent pair even while
    // deltas are being applied
    std::pair<Id, std::vector<float>> read_row(std::uint64_t global_row) const;

    void sgd_step(std::span<const std::uint64_t> rows, std::span<const float> grads,
                  float lr, float beta);
    void reset_row(std::uint64_t global_row);

    Id row_identity(std::uint64_t global_row) const;
    bool row_trained(std::uint64_t global_row) const;
    std::span<const float> momentum_row(std::uint64_t global_row) const;

    const IdentityArray& identities(std::uint32_t shard) const;
    const MetadataArray& metadata(std::uint32_t shard) const;
    const ShardConfig& shard_config(std::uint32_t shard) const;
    const EmbeddingTable& embeddings() const { return embeddings_; }

    // ---- publish support (source side) ----
    PublishCursor make_cursor();
    std::vector<std::uint64_t> dirty_rows_since(const PublishCursor& cursor) const;

    // ---- replica lineage (frozen side) ----
    std::uint32_t base_checksum() const { return base_checksum_; }
    std::uint64_t next_sequence() const { return next_sequence_; }
    void apply_replica_record(std::uint64_t global_row, Id identity,
                              std::span<const float> weights);
    void note_applied_sequence(std::uint64_t sequence) { next_sequence_ = sequence + 1; }

    // identities and weights compare bit-equal
    bool state_equals(const MpzchTable& other) const;

    // internal hook for batch execution: stamps the row as dirty
    void touch_row(std::uint64_t global_row);

private:
    MpzchTable() = default;

    void check_mutable() const;
    void check_embeddings() const;

    TableLayout layout_;
    std::uint32_t max_probe_ = 1;
    std::uint32_t dim_ = 0;
    std::vector<ShardConfig> shard_configs_;
    std::vector<IdentityArray> identities_;
    std::vector<MetadataArray> metadata_;  // absent on frozen tables
    EmbeddingTable embeddings_;
    std::vector<std::uint64_t> row_generation_;
    std::uint64_t generation_clock_ = 1;
    std::uint64_t table_uid_ = 0;
    bool frozen_ = false;
    std::uint32_t base_checksum_ = 0;
    std::uint64_t next_sequence_ = 0;
    mutable std::unique_ptr<std::shared_mutex> replica_lock_;
};

}  // namespace mpzch
