#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mpzch/embedding_store.hpp"
#include "mpzch/rng.hpp"

using namespace mpzch;

namespace {

bool all_zero(std::span<const float> xs) {
    for (float x : xs) {
        if (x != 0.0f) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("fresh rows are bounded uniform draws") {
    const std::uint32_t dim = 16;
    const EmbeddingTable table(64, dim, RowInit{2024});
    const float bound = 1.0f / std::sqrt(static_cast<float>(dim));
    bool some_negative = false;
    bool some_positive = false;
    for (std::uint64_t r = 0; r < table.rows(); ++r) {
        for (float w : table.row(r)) {
            CHECK(w >= -bound);
            CHECK(w <= bound);
            some_negative = some_negative || w < 0.0f;
            some_positive = some_positive || w > 0.0f;
        }
        CHECK(all_zero(table.momentum_row(r)));
        CHECK_FALSE(table.trained(r));
    }
    CHECK(some_negative);
    CHECK(some_positive);
}

TEST_CASE("row initialization depends only on (row, init_seed)") {
    const EmbeddingTable a(8, 4, RowInit{7});
    const EmbeddingTable b(32, 4, RowInit{7});
    const EmbeddingTable c(8, 4, RowInit{8});
    for (std::uint64_t r = 0; r < 8; ++r) {
        const auto ra = a.row(r);
        const auto rb = b.row(r);
        CHECK(std::equal(ra.begin(), ra.end(), rb.begin()));
    }
    CHECK_FALSE(std::equal(a.row(0).begin(), a.row(0).end(), c.row(0).begin()));
}

TEST_CASE("sgd_step applies the momentum update in closed form") {
    EmbeddingTable table(4, 2, RowInit{1});
    const std::vector<float> w0(table.row(2).begin(), table.row(2).end());
    const float lr = 0.5f;
    const float beta = 0.5f;

    const std::vector<std::uint64_t> rows = {2};
    const std::vector<float> g1 = {1.0f, -2.0f};
    table.sgd_step(rows, g1, lr, beta);
    // m1 = g1, w1 = w0 - lr * g1
    CHECK(table.momentum_row(2)[0] == doctest::Approx(1.0f));
    CHECK(table.momentum_row(2)[1] == doctest::Approx(-2.0f));
    CHECK(table.row(2)[0] == doctest::Approx(w0[0] - 0.5f));
    CHECK(table.row(2)[1] == doctest::Approx(w0[1] + 1.0f));
    CHECK(table.trained(2));
    CHECK_FALSE(table.trained(1));

    const std::vector<float> g2 = {2.0f, 2.0f};
    table.sgd_step(rows, g2, lr, beta);
    // m2 = 0.5 * m1 + g2 = (2.5, 1.0)
    CHECK(table.momentum_row(2)[0] == doctest::Approx(2.5f));
    CHECK(table.momentum_row(2)[1] == doctest::Approx(1.0f));
    CHECK(table.row(2)[0] == doctest::Approx(w0[0] - 0.5f - 1.25f));
    CHECK(table.row(2)[1] == doctest::Approx(w0[1] + 1.0f - 0.5f));
}

TEST_CASE("sgd_step with beta zero is plain sgd") {
    EmbeddingTable table(2, 3, RowInit{3});
    const std::vector<float> w0(table.row(0).begin(), table.row(0).end());
    const std::vector<std::uint64_t> rows = {0};
    const std::vector<float> g = {1.0f, 2.0f, 3.0f};
    table.sgd_step(rows, g, 0.1f, 0.0f);
    for (int j = 0; j < 3; ++j) {
        CHECK(table.row(0)[j] == doctest::Approx(w0[j] - 0.1f * g[j]));
    }
}

TEST_CASE("reset_row restores the fresh draw exactly") {
    EmbeddingTable table(16, 8, RowInit{99});
    const std::vector<float> fresh(table.row(5).begin(), table.row(5).end());

    const std::vector<std::uint64_t> rows = {5};
    std::vector<float> g(8, 0.25f);
    table.sgd_step(rows, g, 0.1f, 0.9f);
    table.sgd_step(rows, g, 0.1f, 0.9f);
    CHECK(table.trained(5));
    CHECK_FALSE(all_zero(table.momentum_row(5)));
    CHECK_FALSE(std::equal(fresh.begin(), fresh.end(), table.row(5).begin()));

    table.reset_row(5);
    CHECK(std::equal(fresh.begin(), fresh.end(), table.row(5).begin()));
    CHECK(all_zero(table.momentum_row(5)));
    CHECK_FALSE(table.trained(5));
}

TEST_CASE("gather copies rows in request order without mutating") {
    const EmbeddingTable table(6, 3, RowInit{4});
    const std::vector<std::uint64_t> rows = {4, 0, 4};
    const std::vector<float> out = table.gather(rows);
    REQUIRE(out.size() == 9);
    for (int j = 0; j < 3; ++j) {
        CHECK(out[j] == table.row(4)[j]);
        CHECK(out[3 + j] == table.row(0)[j]);
        CHECK(out[6 + j] == table.row(4)[j]);
    }
    CHECK(table.gather({}).empty());
}

TEST_CASE("shape and hyperparameter validation") {
    EmbeddingTable table(4, 2, RowInit{0});
    const std::vector<std::uint64_t> rows = {1};
    const std::vector<float> good = {1.0f, 1.0f};
    const std::vector<float> bad = {1.0f};
    CHECK_THROWS_AS(table.sgd_step(rows, bad, 0.1f, 0.0f), std::invalid_argument);
    CHECK_THROWS_AS(table.sgd_step(rows, good, 0.0f, 0.0f), std::invalid_argument);
    CHECK_THROWS_AS(table.sgd_step(rows, good, -1.0f, 0.0f), std::invalid_argument);
    CHECK_THROWS_AS(table.sgd_step(rows, good, 0.1f, 1.0f), std::invalid_argument);
    CHECK_THROWS_AS(table.sgd_step(rows, good, 0.1f, -0.1f), std::invalid_argument);
    const std::vector<std::uint64_t> oob = {4};
    CHECK_THROWS_AS(table.sgd_step(oob, good, 0.1f, 0.0f), std::out_of_range);
    CHECK_THROWS_AS(table.row(4), std::out_of_range);
    CHECK_THROWS_AS(table.reset_row(4), std::out_of_range);
    CHECK_THROWS_AS(table.gather(oob), std::out_of_range);
    CHECK_THROWS_AS(EmbeddingTable(4, 0, RowInit{0}), std::invalid_argument);
}

TEST_CASE("weights-only tables reject mutation but serve reads") {
    const EmbeddingTable source(4, 2, RowInit{12});
    std::vector<float> weights(source.weights_data(),
                               source.weights_data() + source.weights_count());
    EmbeddingTable frozen = EmbeddingTable::weights_only(4, 2, std::move(weights));
    CHECK_FALSE(frozen.trainable());
    CHECK(frozen.weights_equal(source));
    CHECK(frozen.row(3)[1] == source.row(3)[1]);
    CHECK(frozen.gather(std::vector<std::uint64_t>{1, 2}) ==
          source.gather(std::vector<std::uint64_t>{1, 2}));

    const std::vector<std::uint64_t> rows = {0};
    const std::vector<float> g = {1.0f, 1.0f};
    CHECK_THROWS_AS(frozen.sgd_step(rows, g, 0.1f, 0.0f), std::logic_error);
    CHECK_THROWS_AS(frozen.reset_row(0), std::logic_error);
    CHECK_THROWS_AS(frozen.trained(0), std::logic_error);
    CHECK_THROWS_AS(frozen.momentum_row(0), std::logic_error);

    CHECK_THROWS_AS(EmbeddingTable::weights_only(4, 2, std::vector<float>(7)),
                    std::invalid_argument);
}

TEST_CASE("overwrite_row replaces exactly one row") {
    EmbeddingTable table(3, 2, RowInit{6});
    const std::vector<float> before_row0(table.row(0).begin(), table.row(0).end());
    const std::vector<float> values = {9.0f, -9.0f};
    table.overwrite_row(1, values);
    CHECK(table.row(1)[0] == 9.0f);
    CHECK(table.row(1)[1] == -9.0f);
    CHECK(std::equal(before_row0.begin(), before_row0.end(), table.row(0).begin()));
    CHECK_THROWS_AS(table.overwrite_row(1, std::vector<float>{1.0f}), std::invalid_argument);
    CHECK_THROWS_AS(table.overwrite_row(3, values), std::out_of_range);
}
