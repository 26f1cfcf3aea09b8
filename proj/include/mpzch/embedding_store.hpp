#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpzch/ids.hpp"

namespace mpzch {

// Row initialization: uniform on [-1/sqrt(dim), +1/sqrt(dim)], drawn from a
// per-row stream derived from (init_seed, row). Re-initializing a row is
// bit-identical regardless of what happened to it before.
struct RowInit {
    std::uint64_t init_seed = 0;
};

// Trainable rows plus momentum accumulators and a per-row "has ever been
// trained" flag. A weights-only table (deserialized for inference) has no
// accumulators and rejects every mutation.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::uint64_t rows, std::uint32_t dim, RowInit init);

    static EmbeddingTable weights_only(std::uint64_t rows, std::uint32_t dim,
                                       std::vector<float> weights);

    std::uint64_t rows() const { return rows_; }
    std::uint32_t dim() const { return dim_; }
    bool trainable() const { return !momentum_.empty() || rows_ == 0; }

    // fresh draw for the weights, zeroed momentum, cleared trained flag
    void reset_row(std::uint64_t row);

    // momentum := beta * momentum + grad; weights := weights - lr * momentum.
    // grads is row-major with one dim-length gradient per entry in rows.
    void sgd_step(std::span<const std::uint64_t> rows, std::span<const float> grads,
                  float lr, float beta);

    // row-major copy of the requested rows
    std::vector<float> gather(std::span<const std::uint64_t> rows) const;

    std::span<const float> row(std::uint64_t row) const;
    std::span<const float> momentum_row(std::uint64_t row) const;
    bool trained(std::uint64_t row) const;

    void overwrite_row(std::uint64_t row, std::span<const float> values);

    const float* weights_data() const { return weights_.data(); }
    std::uint64_t weights_count() const { return weights_.size(); }

    bool weights_equal(const EmbeddingTable& other) const {
        return dim_ == other.dim_ && weights_ == other.weights_;
    }

private:
    void check_row(std::uint64_t row) const;
    void check_trainable() const;

    std::uint64_t rows_ = 0;
    std::uint32_t dim_ = 0;
    RowInit init_;
    std::vector<float> weights_;
    std::vector<float> momentum_;        // empty in weights-only tables
    std::vector<std::uint8_t> trained_;  // empty in weights-only tables
};

}  // namespace mpzch
