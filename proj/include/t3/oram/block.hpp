#pragma once

#include "t3/bytes.hpp"

#include <bit>

namespace t3::oram {

inline constexpr uint32_t kDummyBid = 0xFFFFFFFFu;

// One ORAM block. Dummy blocks (bid == kDummyBid) carry a zero leaf and zero
// payload; serialized size is identical for real and dummy blocks.
struct OramBlock {
    uint32_t bid = kDummyBid;
    uint32_t leaf = 0;
    Bytes payload;

    bool is_dummy() const { return bid == kDummyBid; }

    static OramBlock dummy(size_t payload_bytes) {
        OramBlock b;
        b.payload.assign(payload_bytes, 0);
        return b;
    }
};

// Deepest tree depth (root = 0) at which a block mapped to leaf `block_leaf`
// may reside on the path to `path_leaf`, for a tree of the given height.
inline uint32_t common_depth(uint32_t block_leaf, uint32_t path_leaf, uint32_t height) {
    uint32_t x = block_leaf ^ path_leaf;
    return x == 0 ? height : height - static_cast<uint32_t>(std::bit_width(x));
}

// Reverse-lexicographic eviction order: the g-th eviction path is the leaf
// whose label is g's low `height` bits reversed.
inline uint32_t reverse_lex_leaf(uint64_t g, uint32_t height) {
    uint32_t v = static_cast<uint32_t>(g & ((1ull << height) - 1));
    uint32_t r = 0;
    for (uint32_t i = 0; i < height; ++i) {
        r = (r << 1) | (v & 1);
        v >>= 1;
    }
    return r;
}

}  // namespace t3::oram
