#include "mpzch/embedding_store.hpp"

#include <cmath>
#include <stdexcept>

#include "mpzch/rng.hpp"

namespace mpzch {

namespace {

void draw_row(float* dst, std::uint32_t dim, std::uint64_t row, std::uint64_t init_seed) {
    SplitMix64 stream(mix64(row, init_seed));
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::uint32_t j = 0; j < dim; ++j) {
        dst[j] = static_cast<float>((2.0 * stream.next_unit() - 1.0) * bound);
    }
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::uint64_t rows, std::uint32_t dim, RowInit init)
    : rows_(rows), dim_(dim), init_(init) {
    if (dim == 0) {
        throw std::invalid_argument("embedding dimension must be >= 1");
    }
    weights_.resize(rows * dim);
    momentum_.assign(rows * dim, 0.0f);
    trained_.assign(rows, 0);
    for (std::uint64_t r = 0; r < rows; ++r) {
        draw_row(weights_.data() + r * dim, dim, r, init_.init_seed);
    }
}

EmbeddingTable EmbeddingTable::weights_only(std::uint64_t rows, std::uint32_t dim,
                                            std::vector<float> weights) {
    if (dim == 0) {
        throw std::invalid_argument("embedding dimension must be >= 1");
    }
    if (weights.size() != rows * dim) {
        throw std::invalid_argument("weights payload does not match rows * dim");
    }
    EmbeddingTable table;
    table.rows_ = rows;
    table.dim_ = dim;
    table.weights_ = std::move(weights);
    return table;
}

void EmbeddingTable::check_row(std::uint64_t row) const {
    if (row >= rows_) {
        throw std::out_of_range("embedding row out of range");
    }
}

void EmbeddingTable::check_trainable() const {
    if (!trainable()) {
        throw std::logic_error("embedding table is weights-only (frozen)");
    }
}

void EmbeddingTable::reset_row(std::uint64_t row) {
    check_row(row);
    check_trainable();
    draw_row(weights_.data() + row * dim_, dim_, row, init_.init_seed);
    std::fill_n(momentum_.begin() + row * dim_, dim_, 0.0f);
    trained_[row] = 0;
}

void EmbeddingTable::sgd_step(std::span<const std::uint64_t> rows,
                              std::span<const float> grads, float lr, float beta) {
    check_trainable();
    if (grads.size() != rows.size() * dim_) {
        throw std::invalid_argument("gradient shape does not match rows * dim");
    }
    if (!(lr > 0.0f)) {
        throw std::invalid_argument("learning rate must be positive");
    }
    if (beta < 0.0f || beta >= 1.0f) {
        throw std::invalid_argument("momentum coefficient must lie in [0, 1)");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        check_row(rows[i]);
        float* w = weights_.data() + rows[i] * dim_;
        float* m = momentum_.data() + rows[i] * dim_;
        const float* g = grads.data() + i * dim_;
        for (std::uint32_t j = 0; j < dim_; ++j) {
            m[j] = beta * m[j] + g[j];
            w[j] -= lr * m[j];
        }
        trained_[rows[i]] = 1;
    }
}

std::vector<float> EmbeddingTable::gather(std::span<const std::uint64_t> rows) const {
    std::vector<float> out(rows.size() * dim_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        check_row(rows[i]);
        const float* w = weights_.data() + rows[i] * dim_;
        std::copy_n(w, dim_, out.begin() + i * dim_);
    }
    return out;
}

std::span<const float> EmbeddingTable::row(std::uint64_t row) const {
    check_row(row);
    return {weights_.data() + row * dim_, dim_};
}

std::span<const float> EmbeddingTable::momentum_row(std::uint64_t row) const {
    check_row(row);
    check_trainable();
    return {momentum_.data() + row * dim_, dim_};
}

bool EmbeddingTable::trained(std::uint64_t row) const {
    check_row(row);
    check_trainable();
    return trained_[row] != 0;
}

void EmbeddingTable::overwrite_row(std::uint64_t row, std::span<const float> values) {
    check_row(row);
    if (values.size() != dim_) {
        throw std::invalid_argument("row payload does not match dim");
    }
    std::copy_n(values.data(), dim_, weights_.data() + row * dim_);
}

}  // namespace mpzch
