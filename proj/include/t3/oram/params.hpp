#pragma once

#include "t3/oram/common.hpp"

#include <bit>
#include <cstdint>

namespace t3::oram {

// Plaintext top position map must fit this budget; recursion bottoms out here.
inline constexpr uint32_t kTopMapBudgetBytes = 8192;
inline constexpr uint32_t kLeafEntryBytes = 4;

struct OramParams {
    uint32_t capacity_n = 0;    // logical blocks, power of two >= 2
    uint32_t bucket_z = 0;      // 0 = strategy default (Path 4, Circuit 2)
    uint32_t payload_bytes = 0; // data block payload size
    Strategy strategy = Strategy::PathOram;
    uint32_t recursion_chi = 1024; // leaf labels per position-map block
    uint32_t max_stash = 0;        // 0 = 2 * log2(N) * Z

    static uint32_t min_bucket_z(Strategy s) {
        return s == Strategy::PathOram ? 4 : 2;
    }

    // Fills defaults and checks invariants; throws std::invalid_argument.
    OramParams normalized() const {
        OramParams p = *this;
        if (p.bucket_z == 0) p.bucket_z = min_bucket_z(p.strategy);
        if (p.capacity_n < 2 || !std::has_single_bit(p.capacity_n))
            throw std::invalid_argument("capacity_n must be a power of two >= 2");
        if (p.bucket_z < min_bucket_z(p.strategy))
            throw std::invalid_argument("bucket_z below strategy minimum");
        if (p.payload_bytes == 0)
            throw std::invalid_argument("payload_bytes must be positive");
        if (p.recursion_chi < 2)
            throw std::invalid_argument("recursion_chi must be >= 2");
        if (p.max_stash == 0)
            p.max_stash = 2 * height_for(p.capacity_n) * p.bucket_z;
        return p;
    }

    static uint32_t height_for(uint32_t capacity) {
        return static_cast<uint32_t>(std::bit_width(capacity) - 1); // log2 of a power of two
    }
};

}  // namespace t3::oram
