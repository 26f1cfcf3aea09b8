#include "mpzch/experiments.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "mpzch/baseline_hash.hpp"
#include "mpzch/batch_engine.hpp"
#include "mpzch/embedding_store.hpp"
#include "mpzch/publish.hpp"
#include "mpzch/rng.hpp"
#include "mpzch/table.hpp"

namespace mpzch {

namespace {

constexpr FeatureOrdinal kChurnFeature = 0;

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start)
        .count();
}

void count_outcome(OutcomeCounts& counts, Outcome outcome) {
    switch (outcome) {
        case Outcome::Found: ++counts.found; break;
        case Outcome::Inserted: ++counts.inserted; break;
        case Outcome::Evicted: ++counts.evicted; break;
        case Outcome::Collision: ++counts.collision; break;
    }
}

// Per-step churn arrivals, identical for every method: fresh IDs plus
// reappearances sampled from the recent arrival window.
struct ChurnWorkload {
    std::vector<std::vector<Id>> step_ids;
    std::vector<std::vector<std::uint8_t>> first_flags;
};

ChurnWorkload generate_churn_workload(const ChurnParams& p) {
    ChurnWorkload w;
    w.step_ids.resize(p.steps);
    w.first_flags.resize(p.steps);
    DistinctIdStream fresh(p.seed);
    SplitMix64 sampler(mix64(p.seed, 0x9a75c0de));
    std::vector<std::vector<Id>> arrivals(p.steps);
    for (std::uint64_t t = 0; t < p.steps; ++t) {
        std::vector<Id>& ids = w.step_ids[t];
        std::vector<std::uint8_t>& first = w.first_flags[t];
        for (std::uint64_t k = 0; k < p.new_per_step; ++k) {
            const Id id = fresh.next();
            arrivals[t].push_back(id);
            ids.push_back(id);
            first.push_back(1);
        }
        if (t > 0) {
            const std::uint64_t lo = t > p.reappear_window ? t - p.reappear_window : 0;
            for (std::uint64_t k = 0; k < p.reappear_per_step; ++k) {
                const std::uint64_t s = lo + sampler.next_below(t - lo);
                if (arrivals[s].empty()) continue;
                ids.push_back(arrivals[s][sampler.next_below(arrivals[s].size())]);
                first.push_back(0);
            }
        }
    }
    return w;
}

std::vector<float> step_gradients(std::uint64_t seed, std::uint64_t step,
                                  std::size_t rows, std::uint32_t dim) {
    SplitMix64 stream(mix64(step, seed));
    std::vector<float> grads(rows * dim);
    for (float& g : grads) g = static_cast<float>(stream.next_unit() - 0.5);
    return grads;
}

bool all_zero(std::span<const float> values) {
    for (float v : values)
        if (v != 0.0f) return false;
    return true;
}

FreshnessReport churn_mpzch(const ChurnParams& p, const ChurnWorkload& w) {
    FreshnessReport report;
    report.steps = p.steps;
    MpzchTable table(
        TableConfig::even(p.table_size, p.num_shards, p.max_probe, p.seed, p.dim, p.seed));
    std::unordered_set<Id> step_seen;
    std::unordered_set<std::uint64_t> step_rows;
    std::vector<std::uint64_t> rows;
    for (std::uint64_t t = 0; t < p.steps; ++t) {
        const Timestamp now = (t + 1) * p.step_seconds;
        IdBatch batch;
        batch.now = now;
        batch.ids.reserve(w.step_ids[t].size());
        for (Id id : w.step_ids[t]) batch.ids.push_back({id, kChurnFeature});
        const std::vector<ProbeResult> results = process_batch(table, batch, p.policy);

        step_seen.clear();
        step_rows.clear();
        rows.clear();
        for (std::size_t i = 0; i < results.size(); ++i) {
            const ProbeResult& r = results[i];
            // duplicate positions share one probe; count each ID's event once
            if (!step_seen.insert(w.step_ids[t][i]).second) continue;
            if (r.outcome == Outcome::Evicted) {
                ++report.eviction_count;
                if (!all_zero(table.momentum_row(r.slot)) || table.row_trained(r.slot))
                    ++report.reset_audit_failures;
            } else if (r.outcome == Outcome::Collision) {
                ++report.collision_count;
            }
            if (w.first_flags[t][i]) {
                ++report.first_occurrences;
                if (table.row_trained(r.slot)) ++report.inheritance_count;
            }
            if (step_rows.insert(r.slot).second) rows.push_back(r.slot);
        }
        if (!rows.empty()) {
            table.sgd_step(rows, step_gradients(p.seed, t, rows.size(), p.dim), p.lr,
                           p.beta);
        }
    }
    if (report.first_occurrences > 0)
        report.inheritance_rate = static_cast<double>(report.inheritance_count) /
                                  static_cast<double>(report.first_occurrences);
    return report;
}

FreshnessReport churn_baseline(const ChurnParams& p, const ChurnWorkload& w) {
    FreshnessReport report;
    report.steps = p.steps;
    const BaselineConfig cfg{p.table_size, p.seed};
    EmbeddingTable emb(p.table_size, p.dim, RowInit{p.seed});
    std::vector<Id> owner(p.table_size, kEmptySlot);
    std::unordered_set<Id> step_seen;
    std::unordered_set<std::uint64_t> step_rows;
    std::vector<std::uint64_t> rows;
    for (std::uint64_t t = 0; t < p.steps; ++t) {
        step_seen.clear();
        step_rows.clear();
        rows.clear();
        for (std::size_t i = 0; i < w.step_ids[t].size(); ++i) {
            const Id id = w.step_ids[t][i];
            if (!step_seen.insert(id).second) continue;
            const std::uint64_t row = baseline_assign(id, cfg);
            if (w.first_flags[t][i]) {
                ++report.first_occurrences;
                if (emb.trained(row)) ++report.inheritance_count;
                if (owner[row] != kEmptySlot) ++report.collision_count;
                owner[row] = id;
            }
            if (step_rows.insert(row).second) rows.push_back(row);
        }
        if (!rows.empty()) {
            emb.sgd_step(rows, step_gradients(p.seed, t, rows.size(), p.dim), p.lr, p.beta);
        }
    }
    if (report.first_occurrences > 0)
        report.inheritance_rate = static_cast<double>(report.inheritance_count) /
                                  static_cast<double>(report.first_occurrences);
    return report;
}

}  // namespace

const char* to_string(Method method) {
    return method == Method::Baseline ? "baseline" : "mpzch";
}

Method parse_method(const std::string& name) {
    if (name == "baseline") return Method::Baseline;
    if (name == "mpzch") return Method::Mpzch;
    throw std::invalid_argument("unknown method '" + name + "'");
}

void WorkloadSpec::validate() const {
    if (num_ids < 1) throw std::invalid_argument("num_ids must be >= 1");
    if (table_size < 1) throw std::invalid_argument("table_size must be >= 1");
    if (num_shards < 1) throw std::invalid_argument("num_shards must be >= 1");
    if (method == Method::Mpzch) {
        if (table_size < num_shards)
            throw std::invalid_argument("table_size must be >= num_shards");
        if (max_probe < 1 || max_probe > table_size / num_shards)
            throw std::invalid_argument("max_probe must fit the smallest shard");
    }
}

double analytic_baseline_rate(double num_ids, double table_size) {
    const double occupied = table_size * (1.0 - std::exp(-num_ids / table_size));
    return (num_ids - occupied) / num_ids;
}

CollisionRecord run_collision_experiment(const WorkloadSpec& spec) {
    spec.validate();
    CollisionRecord record;
    record.table_size = spec.table_size;
    record.capacity_ratio =
        static_cast<double>(spec.table_size) / static_cast<double>(spec.num_ids);
    record.method = spec.method;
    record.seed = spec.seed;
    DistinctIdStream ids(spec.seed);
    std::uint64_t distinct = 0;
    if (spec.method == Method::Baseline) {
        record.max_probe = 0;
        const BaselineConfig cfg{spec.table_size, spec.seed};
        std::vector<std::uint8_t> assigned(spec.table_size, 0);
        for (std::uint64_t i = 0; i < spec.num_ids; ++i) {
            std::uint8_t& slot = assigned[baseline_assign(ids.next(), cfg)];
            distinct += slot == 0;
            slot = 1;
        }
    } else {
        record.max_probe = spec.max_probe;
        MpzchTable table(
            TableConfig::even(spec.table_size, spec.num_shards, spec.max_probe, spec.seed));
        const EvictionPolicy policy = EvictionPolicy::disabled();
        for (std::uint64_t i = 0; i < spec.num_ids; ++i) {
            // one-shot insertion over distinct IDs: every non-collision
            // claims a fresh slot
            distinct += table.lookup_or_insert(ids.next(), 0, 1, policy).outcome ==
                        Outcome::Inserted;
        }
    }
    record.distinct_slots = distinct;
    record.collision_rate = static_cast<double>(spec.num_ids - distinct) /
                            static_cast<double>(spec.num_ids);
    return record;
}

CollisionReport run_collision_grid(std::uint64_t num_ids,
                                   std::span<const std::uint64_t> table_sizes,
                                   std::span<const std::uint32_t> probe_depths,
                                   std::uint32_t num_shards, std::uint64_t seed) {
    CollisionReport report;
    report.num_ids = num_ids;
    for (std::uint64_t size : table_sizes) {
        WorkloadSpec spec;
        spec.num_ids = num_ids;
        spec.table_size = size;
        spec.num_shards = num_shards;
        spec.seed = seed;
        spec.method = Method::Baseline;
        report.records.push_back(run_collision_experiment(spec));
        spec.method = Method::Mpzch;
        for (std::uint32_t p : probe_depths) {
            spec.max_probe = p;
            report.records.push_back(run_collision_experiment(spec));
        }
    }
    return report;
}

std::vector<std::uint64_t> default_grid_table_sizes() {
    std::vector<std::uint64_t> sizes;
    for (std::uint64_t s = 100000; s <= 500000; s += 50000) sizes.push_back(s);
    return sizes;
}

std::vector<std::uint32_t> default_grid_probe_depths() {
    return {8, 16, 32, 64, 128, 256, 512};
}

void ChurnParams::validate() const {
    if (table_size < 1) throw std::invalid_argument("table_size must be >= 1");
    if (num_shards < 1) throw std::invalid_argument("num_shards must be >= 1");
    if (table_size < num_shards)
        throw std::invalid_argument("table_size must be >= num_shards");
    if (max_probe < 1 || max_probe > table_size / num_shards)
        throw std::invalid_argument("max_probe must fit the smallest shard");
    if (dim < 1) throw std::invalid_argument("churn simulations need dim >= 1");
    if (step_seconds < 1) throw std::invalid_argument("step_seconds must be >= 1");
    if (reappear_window < 1) throw std::invalid_argument("reappear_window must be >= 1");
    if (!(lr > 0.0f)) throw std::invalid_argument("learning rate must be positive");
    if (beta < 0.0f || beta >= 1.0f)
        throw std::invalid_argument("momentum coefficient must lie in [0, 1)");
    if (method == Method::Mpzch && policy.mode() == EvictionMode::Disabled)
        throw std::invalid_argument("churn simulations need TTL or LRU eviction");
}

FreshnessReport run_churn_simulation(const ChurnParams& params) {
    params.validate();
    const ChurnWorkload workload = generate_churn_workload(params);
    return params.method == Method::Mpzch ? churn_mpzch(params, workload)
                                          : churn_baseline(params, workload);
}

void BenchParams::validate() const {
    if (table_size < 1) throw std::invalid_argument("table_size must be >= 1");
    if (num_shards < 1) throw std::invalid_argument("num_shards must be >= 1");
    if (table_size < num_shards)
        throw std::invalid_argument("table_size must be >= num_shards");
    if (probe_depths.empty()) throw std::invalid_argument("no probe depths requested");
    for (std::uint32_t p : probe_depths) {
        if (p < 1 || p > table_size / num_shards)
            throw std::invalid_argument("max_probe must fit the smallest shard");
    }
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (num_batches < 1) throw std::invalid_argument("num_batches must be >= 1");
    if (pool_size < 1) throw std::invalid_argument("pool_size must be >= 1");
}

LatencyReport run_latency_bench(const BenchParams& params) {
    params.validate();
    DistinctIdStream pool_ids(params.seed);
    std::vector<Id> pool(params.pool_size);
    for (std::uint64_t i = 0; i < params.pool_size; ++i) pool[i] = pool_ids.at(i);

    // Warmup batches precede the measured ones in a single sampled stream,
    // so both modes reach the clock with the same table contents and the
    // same touched memory.
    SplitMix64 sampler(mix64(params.seed, 0x5ca1ab1e));
    std::vector<IdBatch> batches(params.warmup_batches + params.num_batches);
    for (IdBatch& batch : batches) {
        batch.now = 1;
        batch.ids.resize(params.batch_size);
        for (BatchEntry& e : batch.ids)
            e = {pool[sampler.next_below(params.pool_size)], 0};
    }

    const EvictionPolicy policy = EvictionPolicy::disabled();
    const std::uint64_t total_ids = params.batch_size * params.num_batches;
    LatencyReport report;
    for (std::uint32_t p : params.probe_depths) {
        LatencyRecord rec;
        rec.max_probe = p;
        rec.batch_size = params.batch_size;
        rec.num_batches = params.num_batches;
        rec.total_ids = total_ids;

        {
            MpzchTable table(
                TableConfig::even(params.table_size, params.num_shards, p, params.seed));
            for (std::uint64_t w = 0; w < params.warmup_batches; ++w)
                process_batch(table, batches[w], policy, ExecMode::Parallel);
            const auto start = std::chrono::steady_clock::now();
            for (std::uint64_t b = params.warmup_batches; b < batches.size(); ++b) {
                for (const ProbeResult& r :
                     process_batch(table, batches[b], policy, ExecMode::Parallel))
                    count_outcome(rec.batched_outcomes, r.outcome);
            }
            const double ms = ms_since(start);
            rec.batched_ms_per_batch = ms / static_cast<double>(params.num_batches);
            rec.batched_ids_per_sec = static_cast<double>(total_ids) / (ms / 1000.0);
        }
        {
            MpzchTable table(
                TableConfig::even(params.table_size, params.num_shards, p, params.seed));
            for (std::uint64_t w = 0; w < params.warmup_batches; ++w) {
                for (const BatchEntry& e : batches[w].ids)
                    table.lookup_or_insert(e.id, e.feature, batches[w].now, policy);
            }
            const auto start = std::chrono::steady_clock::now();
            for (std::uint64_t b = params.warmup_batches; b < batches.size(); ++b) {
                for (const BatchEntry& e : batches[b].ids)
                    count_outcome(
                        rec.per_id_outcomes,
                        table.lookup_or_insert(e.id, e.feature, batches[b].now, policy)
                            .outcome);
            }
            const double ms = ms_since(start);
            rec.per_id_ms_per_batch = ms / static_cast<double>(params.num_batches);
            rec.per_id_ids_per_sec = static_cast<double>(total_ids) / (ms / 1000.0);
        }
        rec.speedup = rec.batched_ids_per_sec / rec.per_id_ids_per_sec;
        report.records.push_back(rec);
    }
    return report;
}

void PublishRoundtripParams::validate() const {
    if (table_size < 1) throw std::invalid_argument("table_size must be >= 1");
    if (num_shards < 1) throw std::invalid_argument("num_shards must be >= 1");
    if (table_size < num_shards)
        throw std::invalid_argument("table_size must be >= num_shards");
    if (max_probe < 1 || max_probe > table_size / num_shards)
        throw std::invalid_argument("max_probe must fit the smallest shard");
    if (dim < 1) throw std::invalid_argument("publishing needs dim >= 1");
    if (num_cuts < 1) throw std::invalid_argument("num_cuts must be >= 1");
    if (num_batches < num_cuts || num_batches % num_cuts != 0)
        throw std::invalid_argument("num_batches must be a positive multiple of num_cuts");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (pool_size < 1) throw std::invalid_argument("pool_size must be >= 1");
    if (!(lr > 0.0f)) throw std::invalid_argument("learning rate must be positive");
    if (beta < 0.0f || beta >= 1.0f)
        throw std::invalid_argument("momentum coefficient must lie in [0, 1)");
}

PublishRoundtripReport run_publish_roundtrip(const PublishRoundtripParams& p) {
    p.validate();
    MpzchTable source(
        TableConfig::even(p.table_size, p.num_shards, p.max_probe, p.seed, p.dim, p.seed));
    const EvictionPolicy policy = EvictionPolicy::lru();
    DistinctIdStream pool_ids(p.seed);
    std::vector<Id> pool(p.pool_size);
    for (std::uint64_t i = 0; i < p.pool_size; ++i) pool[i] = pool_ids.at(i);
    SplitMix64 sampler(mix64(p.seed, 0x0ddba11));

    PublishRoundtripReport report;
    report.rows = source.total_rows();
    report.dim = p.dim;
    report.batches = p.num_batches;
    report.cuts = p.num_cuts;

    std::unordered_set<std::uint64_t> step_rows;
    std::uint64_t step = 0;
    auto run_batch = [&] {
        IdBatch batch;
        batch.now = ++step;
        batch.ids.resize(p.batch_size);
        for (BatchEntry& e : batch.ids) e = {pool[sampler.next_below(p.pool_size)], 0};
        const std::vector<ProbeResult> results = process_batch(source, batch, policy);
        step_rows.clear();
        std::vector<std::uint64_t> rows;
        for (const ProbeResult& r : results) {
            // duplicate positions share one probe; count per distinct row
            if (step_rows.insert(r.slot).second) {
                rows.push_back(r.slot);
                if (r.outcome == Outcome::Evicted) ++report.source_evictions;
            }
        }
        if (!rows.empty()) {
            source.sgd_step(rows, step_gradients(p.seed, step, rows.size(), p.dim), p.lr,
                            p.beta);
        }
    };

    // a little history before the snapshot so it captures trained state
    for (int warm = 0; warm < 3; ++warm) run_batch();

    const std::vector<std::uint8_t> snapshot = serialize_snapshot(source);
    report.snapshot_bytes = snapshot.size();
    report.expected_snapshot_bytes = 48 + std::uint64_t{8} * source.num_shards() +
                                     8 * source.total_rows() +
                                     std::uint64_t{4} * p.dim * source.total_rows();
    report.snapshot_size_exact = report.snapshot_bytes == report.expected_snapshot_bytes;

    MpzchTable replica = parse_snapshot(snapshot);
    report.snapshot_roundtrip_bit_exact =
        source.state_equals(replica) && serialize_snapshot(replica) == snapshot;

    DeltaSource cutter(source, snapshot_checksum(snapshot));
    const std::uint64_t batches_per_cut = p.num_batches / p.num_cuts;
    for (std::uint64_t c = 0; c < p.num_cuts; ++c) {
        for (std::uint64_t b = 0; b < batches_per_cut; ++b) run_batch();
        const DeltaLog log = parse_delta(serialize_delta(cutter.cut()));
        report.records_published += log.records.size();
        apply_delta(replica, log);
    }

    report.replica_matches_source = source.state_equals(replica);
    report.replica_lookup_consistent = true;
    for (std::uint64_t r = 0; r < replica.total_rows(); ++r) {
        const Id id = replica.row_identity(r);
        if (id == kEmptySlot) continue;
        const ProbeResult res = replica.lookup(id);
        if (res.outcome != Outcome::Found || res.slot != r) {
            report.replica_lookup_consistent = false;
            break;
        }
    }
    return report;
}

}  // namespace mpzch
