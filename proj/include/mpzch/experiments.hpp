#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpzch/eviction.hpp"
#include "mpzch/ids.hpp"

namespace mpzch {

enum class Method { Baseline, Mpzch };

const char* to_string(Method method);
Method parse_method(const std::string& name);

struct WorkloadSpec {
    std::uint64_t num_ids = 1;
    std::uint64_t table_size = 1;
    std::uint32_t max_probe = 1;  // ignored by the baseline
    Method method = Method::Mpzch;
    std::uint32_t num_shards = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

// One cell of the collision-rate matrix. collision_rate is
// (num_ids - distinct_slots) / num_ids; max_probe is 0 on baseline rows.
struct CollisionRecord {
    std::uint64_t table_size = 0;
    double capacity_ratio = 0.0;  // table_size / num_ids
    std::uint32_t max_probe = 0;
    Method method = Method::Mpzch;
    double collision_rate = 0.0;
    std::uint64_t distinct_slots = 0;
    std::uint64_t seed = 0;
};

struct CollisionReport {
    std::uint64_t num_ids = 0;
    std::vector<CollisionRecord> records;
};

// Expected baseline collision rate for N uniform IDs into m rows:
// (N - m(1 - e^(-N/m))) / N.
double analytic_baseline_rate(double num_ids, double table_size);

// Feed num_ids distinct seeded IDs once each through the chosen method
// (MPZCH runs with eviction disabled) and measure distinct assigned slots.
CollisionRecord run_collision_experiment(const WorkloadSpec& spec);

// The full scaled collision matrix: per table size, one baseline record
// plus one MPZCH record per probe depth.
CollisionReport run_collision_grid(std::uint64_t num_ids,
                                   std::span<const std::uint64_t> table_sizes,
                                   std::span<const std::uint32_t> probe_depths,
                                   std::uint32_t num_shards, std::uint64_t seed);

std::vector<std::uint64_t> default_grid_table_sizes();  // 100k..500k step 50k
std::vector<std::uint32_t> default_grid_probe_depths();  // 8..512 doubling

struct ChurnParams {
    std::uint64_t table_size = 8192;
    std::uint32_t max_probe = 64;
    std::uint32_t num_shards = 4;
    Method method = Method::Mpzch;
    EvictionPolicy policy = EvictionPolicy::ttl(TtlPolicy{86400, {}});
    std::uint32_t dim = 8;
    std::uint64_t seed = 0;
    std::uint64_t steps = 200;
    std::uint64_t step_seconds = 3600;
    std::uint64_t new_per_step = 50;
    std::uint64_t reappear_per_step = 100;
    std::uint64_t reappear_window = 20;  // steps back that reappearing IDs come from
    float lr = 0.05f;
    float beta = 0.9f;

    void validate() const;
};

struct FreshnessReport {
    std::uint64_t steps = 0;
    std::uint64_t first_occurrences = 0;
    std::uint64_t inheritance_count = 0;  // first occurrences landing on trained rows
    double inheritance_rate = 0.0;
    std::uint64_t eviction_count = 0;
    std::uint64_t collision_count = 0;
    std::uint64_t reset_audit_failures = 0;  // Evicted rows left with stale state
};

// Churn/freshness simulation: per step, new IDs arrive and recent IDs
// reappear, every touched row takes a gradient step, and each first
// occurrence is audited for stale-state inheritance. The generated workload
// depends only on the churn parameters, not on the method, so baseline and
// MPZCH runs over the same params see the same ID sequence.
FreshnessReport run_churn_simulation(const ChurnParams& params);

// Defaults model a production-shaped serving table: the id pool and table
// dwarf the caches, so per-id calls pay a cold probe per position while
// batched calls pay it once per unique id. warmup_batches are processed
// identically in both modes before the clock starts, keeping one-time
// costs (page faults, the insert flood of an empty table) out of the
// steady-state comparison.
struct BenchParams {
    std::uint64_t table_size = 4194304;
    std::uint32_t num_shards = 4;
    std::vector<std::uint32_t> probe_depths = default_grid_probe_depths();
    std::uint64_t batch_size = 1048576;
    std::uint64_t num_batches = 16;
    std::uint64_t warmup_batches = 1;  // untimed, run before measurement in both modes
    std::uint64_t pool_size = 524288;  // unique IDs the batches draw from
    std::uint64_t seed = 0;

    void validate() const;
};

struct OutcomeCounts {
    std::uint64_t found = 0;
    std::uint64_t inserted = 0;
    std::uint64_t evicted = 0;
    std::uint64_t collision = 0;

    bool operator==(const OutcomeCounts&) const = default;
};

struct LatencyRecord {
    std::uint32_t max_probe = 0;
    std::uint64_t batch_size = 0;
    std::uint64_t num_batches = 0;
    std::uint64_t total_ids = 0;
    double batched_ms_per_batch = 0.0;
    double per_id_ms_per_batch = 0.0;
    double batched_ids_per_sec = 0.0;
    double per_id_ids_per_sec = 0.0;
    double speedup = 0.0;  // batched_ids_per_sec / per_id_ids_per_sec
    OutcomeCounts batched_outcomes;
    OutcomeCounts per_id_outcomes;
};

struct LatencyReport {
    std::vector<LatencyRecord> records;
};

// Wall-time comparison of batched (dedup + per-shard) execution against a
// one-call-per-position loop, on identical precomputed workloads. Timings
// are informational; operation counts are deterministic.
LatencyReport run_latency_bench(const BenchParams& params);

struct PublishRoundtripParams {
    std::uint64_t table_size = 4096;
    std::uint32_t num_shards = 4;
    std::uint32_t max_probe = 32;
    std::uint32_t dim = 8;
    std::uint64_t seed = 0;
    std::uint64_t num_batches = 100;  // must divide evenly into num_cuts groups
    std::uint64_t num_cuts = 10;
    std::uint64_t batch_size = 512;
    std::uint64_t pool_size = 12288;  // ~3x table under LRU forces evictions
    float lr = 0.05f;
    float beta = 0.9f;

    void validate() const;
};

struct PublishRoundtripReport {
    std::uint64_t rows = 0;
    std::uint32_t dim = 0;
    std::uint64_t batches = 0;
    std::uint64_t cuts = 0;
    std::uint64_t records_published = 0;
    std::uint64_t source_evictions = 0;
    std::uint64_t snapshot_bytes = 0;
    std::uint64_t expected_snapshot_bytes = 0;
    bool snapshot_size_exact = false;
    bool snapshot_roundtrip_bit_exact = false;
    bool replica_matches_source = false;
    bool replica_lookup_consistent = false;

    bool ok() const {
        return snapshot_size_exact && snapshot_roundtrip_bit_exact &&
               replica_matches_source && replica_lookup_consistent;
    }
};

// Train a source table under LRU churn, snapshot it, keep publishing delta
// cuts to a frozen replica, and verify the replica tracks the source
// bit-for-bit while staying lookup-consistent.
PublishRoundtripReport run_publish_roundtrip(const PublishRoundtripParams& params);

}  // namespace mpzch
