#pragma once

#include <cstdint>
#include <stdexcept>

#include "mpzch/ids.hpp"

namespace mpzch {

// Stateless hash-based assignment: the comparison method. No identity
// tracking, no probing, no eviction; distinct IDs silently share rows.
struct BaselineConfig {
    std::uint64_t table_size = 1;
    std::uint64_t seed = 0;

    void validate() const {
        if (table_size < 1) throw std::invalid_argument("table_size must be >= 1");
    }
};

inline std::uint64_t baseline_assign(Id id, const BaselineConfig& cfg) {
    require_valid_id(id);
    return mix64(id, cfg.seed) % cfg.table_size;
}

}  // namespace mpzch
