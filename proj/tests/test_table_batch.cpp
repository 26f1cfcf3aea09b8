#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "mpzch/batch_engine.hpp"
#include "mpzch/rng.hpp"
#include "mpzch/table.hpp"

using namespace mpzch;

namespace {

bool all_zero(std::span<const float> xs) {
    for (float x : xs) {
        if (x != 0.0f) return false;
    }
    return true;
}

// Deterministic search for an ID owned by `shard` with the given home slot.
Id find_id(const MpzchTable& table, std::uint32_t shard, SlotIndex home, Id start = 1) {
    for (Id id = start;; ++id) {
        if (shard_of(id, table.layout()) == shard &&
            home_slot(id, table.shard_config(shard)) == home) {
            return id;
        }
    }
}

IdBatch batch_of(std::initializer_list<Id> ids, Timestamp now, FeatureOrdinal feature = 0) {
    IdBatch b;
    b.now = now;
    for (Id id : ids) b.ids.push_back({id, feature});
    return b;
}

bool tables_fully_equal(const MpzchTable& a, const MpzchTable& b) {
    if (!a.state_equals(b)) return false;
    for (std::uint32_t s = 0; s < a.num_shards(); ++s) {
        if (!(a.metadata(s) == b.metadata(s))) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("table construction and accessors") {
    const MpzchTable table(TableConfig::even(10, 4, 2, 77, 3, 5));
    CHECK(table.total_rows() == 10);
    CHECK(table.num_shards() == 4);
    CHECK(table.max_probe() == 2);
    CHECK(table.dim() == 3);
    CHECK(table.has_embeddings());
    CHECK_FALSE(table.frozen());
    CHECK(table.layout().shard_capacities == std::vector<std::uint64_t>{3, 3, 2, 2});
    CHECK(table.shard_config(1).capacity == 3);
    CHECK(table.shard_config(1).seed == 77);
    CHECK_THROWS_AS(table.shard_config(4), std::out_of_range);

    MpzchTable index_only(TableConfig::even(8, 2, 2, 0));
    CHECK_FALSE(index_only.has_embeddings());
    CHECK_THROWS_AS(index_only.gather(std::vector<std::uint64_t>{0}), std::logic_error);
    CHECK_THROWS_AS(index_only.reset_row(0), std::logic_error);
}

TEST_CASE("lookup_or_insert returns global rows and couples eviction to reset") {
    TableConfig cfg;
    cfg.shard_capacities = {4, 4};
    cfg.max_probe = 4;
    cfg.seed = 3;
    cfg.dim = 4;
    cfg.init_seed = 9;
    MpzchTable table(cfg);
    const MpzchTable twin(cfg);  // untouched copy of the initial weights
    const EvictionPolicy policy = EvictionPolicy::lru();

    // fill shard 0 completely
    std::vector<Id> residents;
    Id cursor = 1;
    while (residents.size() < 4) {
        const Id id = find_id(table, 0, residents.size() % 4, cursor);
        cursor = id + 1;
        const ProbeResult r = table.lookup_or_insert(id, 0, 10 + residents.size(), policy);
        if (r.outcome == Outcome::Inserted) residents.push_back(id);
    }

    // train every row of shard 0 so the reset is observable
    const std::vector<std::uint64_t> rows = {0, 1, 2, 3};
    const std::vector<float> grads(16, 0.5f);
    table.sgd_step(rows, grads, 0.1f, 0.9f);
    for (std::uint64_t r : rows) CHECK(table.row_trained(r));

    const Id intruder = find_id(table, 0, 2, cursor);
    const ProbeResult r = table.lookup_or_insert(intruder, 0, 100, policy);
    REQUIRE(r.outcome == Outcome::Evicted);
    CHECK(r.evicted);
    CHECK(r.slot < 4);  // global row inside shard 0
    CHECK(table.row_identity(r.slot) == intruder);
    CHECK_FALSE(table.row_trained(r.slot));
    CHECK(all_zero(table.momentum_row(r.slot)));
    const auto fresh = twin.embeddings().row(r.slot);
    const auto reset = table.embeddings().row(r.slot);
    CHECK(std::equal(fresh.begin(), fresh.end(), reset.begin()));
}

TEST_CASE("lookup is read-only and global") {
    MpzchTable table(TableConfig::even(16, 2, 4, 21));
    const EvictionPolicy policy = EvictionPolicy::disabled();
    const Id id = find_id(table, 1, 3);
    const ProbeResult ins = table.lookup_or_insert(id, 0, 5, policy);
    REQUIRE(ins.outcome == Outcome::Inserted);
    const ProbeResult hit = table.lookup(id);
    CHECK(hit == ProbeResult{ins.slot, false, Outcome::Found});
    CHECK(table.row_identity(hit.slot) == id);
    CHECK(table.lookup(id + 12345).outcome == Outcome::Collision);
}

TEST_CASE("dirty tracking follows insert, evict, and training writes") {
    MpzchTable table(TableConfig::even(8, 1, 2, 5, 2, 0));
    const EvictionPolicy ttl = EvictionPolicy::ttl(TtlPolicy{100, {}});

    PublishCursor c1 = table.make_cursor();
    CHECK(table.dirty_rows_since(c1).empty());

    const Id a = find_id(table, 0, 1);
    const ProbeResult ra = table.lookup_or_insert(a, 0, 10, ttl);
    REQUIRE(ra.outcome == Outcome::Inserted);
    CHECK(table.dirty_rows_since(c1) == std::vector<std::uint64_t>{ra.slot});

    // a refresh of an existing entry is not a publishable change
    PublishCursor c2 = table.make_cursor();
    CHECK(table.lookup_or_insert(a, 0, 20, ttl).outcome == Outcome::Found);
    CHECK(table.dirty_rows_since(c2).empty());
    CHECK(table.dirty_rows_since(c1) == std::vector<std::uint64_t>{ra.slot});

    // a collision refreshes shared metadata but publishes nothing
    const Id b = find_id(table, 0, 1, a + 1);
    const Id c = find_id(table, 0, 1, b + 1);
    const Id d = find_id(table, 0, 2, c + 1);
    REQUIRE(table.lookup_or_insert(b, 0, 20, ttl).outcome == Outcome::Inserted);
    REQUIRE(table.lookup_or_insert(d, 0, 20, ttl).outcome == Outcome::Inserted);
    PublishCursor c3 = table.make_cursor();
    REQUIRE(table.lookup_or_insert(c, 0, 21, ttl).outcome == Outcome::Collision);
    CHECK(table.dirty_rows_since(c3).empty());

    // sgd and reset both mark rows dirty
    const std::vector<std::uint64_t> rows = {ra.slot};
    table.sgd_step(rows, std::vector<float>{1.0f, 1.0f}, 0.1f, 0.0f);
    CHECK(table.dirty_rows_since(c3) == std::vector<std::uint64_t>{ra.slot});
    PublishCursor c4 = table.make_cursor();
    table.reset_row(3);
    CHECK(table.dirty_rows_since(c4) == std::vector<std::uint64_t>{3});
}

TEST_CASE("cursor validation") {
    MpzchTable table(TableConfig::even(4, 1, 1, 0));
    MpzchTable other(TableConfig::even(4, 1, 1, 0));
    const PublishCursor good = table.make_cursor();
    CHECK_NOTHROW(table.dirty_rows_since(good));

    CHECK_THROWS_AS(other.dirty_rows_since(good), std::invalid_argument);
    CHECK_THROWS_AS(table.dirty_rows_since(PublishCursor{}), std::invalid_argument);
    PublishCursor forged = good;
    forged.generation = 999;
    CHECK_THROWS_AS(table.dirty_rows_since(forged), std::invalid_argument);
}

TEST_CASE("dedup keeps first occurrences and inverts exactly") {
    SUBCASE("duplicates collapse") {
        const std::vector<BatchEntry> entries = {{7, 0}, {9, 0}, {7, 0}};
        const DedupResult d = dedup(entries);
        CHECK(d.uniques == std::vector<BatchEntry>{{7, 0}, {9, 0}});
        CHECK(d.inverse == std::vector<std::uint32_t>{0, 1, 0});
    }
    SUBCASE("empty batch") {
        const DedupResult d = dedup({});
        CHECK(d.uniques.empty());
        CHECK(d.inverse.empty());
    }
    SUBCASE("all distinct keeps order") {
        const std::vector<BatchEntry> entries = {{5, 0}, {3, 0}, {8, 1}};
        const DedupResult d = dedup(entries);
        CHECK(d.uniques == entries);
        CHECK(d.inverse == std::vector<std::uint32_t>{0, 1, 2});
    }
    SUBCASE("the key is the (id, feature) pair") {
        const std::vector<BatchEntry> entries = {{7, 0}, {7, 1}, {7, 0}, {7, 1}};
        const DedupResult d = dedup(entries);
        CHECK(d.uniques == std::vector<BatchEntry>{{7, 0}, {7, 1}});
        CHECK(d.inverse == std::vector<std::uint32_t>{0, 1, 0, 1});
    }
    SUBCASE("invalid ids are rejected with their batch position") {
        const std::vector<BatchEntry> entries = {{1, 0}, {2, 0}, {kEmptySlot, 0}};
        try {
            dedup(entries);
            FAIL("expected invalid_argument");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("position 2") != std::string::npos);
        }
    }
    SUBCASE("randomized inverse consistency") {
        SplitMix64 rng(314);
        std::vector<BatchEntry> entries;
        for (int i = 0; i < 5000; ++i)
            entries.push_back({rng.next_below(200), static_cast<FeatureOrdinal>(rng.next_below(3))});
        const DedupResult d = dedup(entries);
        REQUIRE(d.inverse.size() == entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i)
            CHECK(d.uniques[d.inverse[i]] == entries[i]);
        std::vector<BatchEntry> sorted = d.uniques;
        std::sort(sorted.begin(), sorted.end(), [](BatchEntry x, BatchEntry y) {
            return x.id != y.id ? x.id < y.id : x.feature < y.feature;
        });
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
}

TEST_CASE("duplicate batch positions share one probe") {
    MpzchTable table(TableConfig::even(16, 2, 4, 8));
    const EvictionPolicy policy = EvictionPolicy::disabled();
    const Id id = find_id(table, 0, 2);
    const auto results = process_batch(table, batch_of({id, id, id}, 5), policy);
    REQUIRE(results.size() == 3);
    CHECK(results[0].outcome == Outcome::Inserted);  // one insert, seen by all positions
    CHECK(results[1] == results[0]);
    CHECK(results[2] == results[0]);
    int stored = 0;
    for (std::uint32_t s = 0; s < table.num_shards(); ++s) {
        for (std::uint64_t i = 0; i < table.identities(s).size(); ++i)
            stored += table.identities(s)[i] == id;
    }
    CHECK(stored == 1);
}

TEST_CASE("uniques that share a home slot cascade within the window") {
    MpzchTable table(TableConfig::even(32, 1, 4, 13));
    const EvictionPolicy policy = EvictionPolicy::disabled();
    const Id p = find_id(table, 0, 7);
    const Id q = find_id(table, 0, 7, p + 1);
    const auto results = process_batch(table, batch_of({p, q}, 1), policy);
    CHECK(results[0] == ProbeResult{7, false, Outcome::Inserted});
    CHECK(results[1] == ProbeResult{8, false, Outcome::Inserted});
}

TEST_CASE("per-feature ttl flows through batches") {
    MpzchTable table(TableConfig::even(64, 1, 4, 2));
    TtlPolicy ttl_cfg;
    ttl_cfg.default_ttl_seconds = 1000;
    ttl_cfg.per_feature_ttl = {{5, 60}};
    const EvictionPolicy policy = EvictionPolicy::ttl(ttl_cfg);

    IdBatch batch;
    batch.now = 100;
    batch.ids = {{11, 5}, {12, 2}};
    const auto results = process_batch(table, batch, policy);
    REQUIRE(results[0].outcome == Outcome::Inserted);
    REQUIRE(results[1].outcome == Outcome::Inserted);
    CHECK(table.metadata(0)[results[0].slot] == 160);    // now + per-feature ttl
    CHECK(table.metadata(0)[results[1].slot] == 1100);   // now + default ttl
}

TEST_CASE("a singleton batch equals the single-id path") {
    TableConfig cfg = TableConfig::even(48, 4, 4, 31, 2, 7);
    MpzchTable via_batch(cfg);
    MpzchTable via_single(cfg);
    const EvictionPolicy policy = EvictionPolicy::ttl(TtlPolicy{50, {}});
    SplitMix64 rng(88);
    DistinctIdStream ids(55);
    std::vector<Id> universe;
    for (int i = 0; i < 40; ++i) universe.push_back(ids.next());

    Timestamp now = 1;
    for (int op = 0; op < 300; ++op) {
        now += rng.next_below(4);
        const Id id = universe[rng.next_below(universe.size())];
        const auto feature = static_cast<FeatureOrdinal>(rng.next_below(3));
        IdBatch batch;
        batch.now = now;
        batch.ids = {{id, feature}};
        const auto batch_result = process_batch(via_batch, batch, policy);
        const ProbeResult single = via_single.lookup_or_insert(id, feature, now, policy);
        REQUIRE(batch_result.size() == 1);
        CHECK(batch_result[0] == single);
    }
    CHECK(tables_fully_equal(via_batch, via_single));
}

TEST_CASE("parallel and serial execution are bit-identical") {
    SplitMix64 rng(4096);
    for (int round = 0; round < 8; ++round) {
        TableConfig cfg;
        const std::uint32_t shards = static_cast<std::uint32_t>(1 + rng.next_below(6));
        for (std::uint32_t s = 0; s < shards; ++s)
            cfg.shard_capacities.push_back(8 + rng.next_below(56));
        cfg.max_probe = static_cast<std::uint32_t>(1 + rng.next_below(8));
        cfg.seed = rng.next();
        cfg.dim = 2;
        cfg.init_seed = rng.next();
        MpzchTable serial(cfg);
        MpzchTable parallel(cfg);

        const EvictionPolicy policy = round % 2 == 0
                                          ? EvictionPolicy::lru()
                                          : EvictionPolicy::ttl(TtlPolicy{30, {}});
        DistinctIdStream ids(rng.next());
        std::vector<Id> universe;
        const std::uint64_t universe_size = serial.total_rows() * 2;
        for (std::uint64_t i = 0; i < universe_size; ++i) universe.push_back(ids.next());

        Timestamp now = 1;
        for (int b = 0; b < 12; ++b) {
            now += 1 + rng.next_below(10);
            IdBatch batch;
            batch.now = now;
            const std::uint64_t len = 1 + rng.next_below(96);
            for (std::uint64_t k = 0; k < len; ++k)
                batch.ids.push_back({universe[rng.next_below(universe.size())],
                                     static_cast<FeatureOrdinal>(rng.next_below(2))});
            const auto rs = process_batch(serial, batch, policy, ExecMode::Serial);
            const auto rp = process_batch(parallel, batch, policy, ExecMode::Parallel);
            CHECK(rs == rp);
        }
        CHECK(tables_fully_equal(serial, parallel));
    }
}

TEST_CASE("batch validation surfaces before any mutation") {
    MpzchTable table(TableConfig::even(16, 2, 2, 4));
    const EvictionPolicy policy = EvictionPolicy::disabled();
    IdBatch bad;
    bad.now = 5;
    bad.ids = {{1, 0}, {1ull << 63, 0}};
    CHECK_THROWS_AS(process_batch(table, bad, policy), std::invalid_argument);
    for (std::uint32_t s = 0; s < table.num_shards(); ++s) {
        for (std::uint64_t i = 0; i < table.identities(s).size(); ++i)
            CHECK(table.identities(s)[i] == kEmptySlot);
    }

    // TTL overflow is raised by metadata preparation, not mid-probe
    const EvictionPolicy ttl = EvictionPolicy::ttl(TtlPolicy{1000, {}});
    IdBatch overflow;
    overflow.now = ~std::uint64_t{0} - 5;
    overflow.ids = {{1, 0}};
    CHECK_THROWS_AS(process_batch(table, overflow, ttl), std::overflow_error);
}

TEST_CASE("process_shard_batch validates its spans") {
    MpzchTable table(TableConfig::even(8, 2, 2, 4));
    const EvictionPolicy policy = EvictionPolicy::disabled();
    std::vector<Id> ids = {1};
    std::vector<std::uint64_t> metas = {0};
    std::vector<ProbeResult> out(1);
    CHECK_THROWS_AS(table.process_shard_batch(2, ids, metas, 0, policy, out),
                    std::out_of_range);
    std::vector<ProbeResult> short_out;
    CHECK_THROWS_AS(table.process_shard_batch(0, ids, metas, 0, policy, short_out),
                    std::invalid_argument);
}

TEST_CASE("frozen tables reject every training-path call") {
    const TableLayout layout = TableLayout::even(8, 2, 3);
    std::vector<IdentityArray> identities = {IdentityArray(4), IdentityArray(4)};
    EmbeddingTable weights = EmbeddingTable::weights_only(8, 2, std::vector<float>(16, 0.0f));
    MpzchTable frozen = MpzchTable::frozen_from_parts(layout, 2, std::move(identities),
                                                      std::move(weights), 0xabcd);
    CHECK(frozen.frozen());
    CHECK(frozen.base_checksum() == 0xabcd);
    CHECK(frozen.dim() == 2);

    const EvictionPolicy policy = EvictionPolicy::disabled();
    CHECK_THROWS_AS(frozen.lookup_or_insert(1, 0, 0, policy), std::logic_error);
    CHECK_THROWS_AS(process_batch(frozen, batch_of({1}, 0), policy), std::logic_error);
    CHECK_THROWS_AS(frozen.sgd_step(std::vector<std::uint64_t>{0},
                                    std::vector<float>{1.0f, 1.0f}, 0.1f, 0.0f),
                    std::logic_error);
    CHECK_THROWS_AS(frozen.reset_row(0), std::logic_error);
    CHECK_THROWS_AS(frozen.make_cursor(), std::logic_error);
    CHECK_THROWS_AS(frozen.metadata(0), std::logic_error);
    CHECK_NOTHROW(frozen.lookup(1));
    CHECK_NOTHROW(frozen.gather(std::vector<std::uint64_t>{0, 7}));
}

TEST_CASE("frozen_from_parts validates shapes") {
    const TableLayout layout = TableLayout::even(8, 2, 3);
    auto make_ids = [] {
        return std::vector<IdentityArray>{IdentityArray(4), IdentityArray(4)};
    };
    CHECK_THROWS_AS(
        MpzchTable::frozen_from_parts(layout, 2, {IdentityArray(4)},
                                      EmbeddingTable::weights_only(8, 2, std::vector<float>(16)),
                                      0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        MpzchTable::frozen_from_parts(layout, 2, {IdentityArray(4), IdentityArray(5)},
                                      EmbeddingTable::weights_only(8, 2, std::vector<float>(16)),
                                      0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        MpzchTable::frozen_from_parts(layout, 2, make_ids(),
                                      EmbeddingTable::weights_only(4, 2, std::vector<float>(8)),
                                      0),
        std::invalid_argument);
    CHECK_NOTHROW(
        MpzchTable::frozen_from_parts(layout, 2, make_ids(),
                                      EmbeddingTable::weights_only(8, 2, std::vector<float>(16)),
                                      0));
}
