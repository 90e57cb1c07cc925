#pragma once

#include "t3/oram/block.hpp"
#include "t3/oram/common.hpp"

#include <optional>
#include <vector>

namespace t3::oram {

// Fixed array of max_stash slots, dummy-padded. Every operation scans every
// slot exactly once, so the touch trace depends only on the slot count, never
// on occupancy or on which bid is being handled.
class Stash {
  public:
    Stash(uint32_t slot_count, uint32_t payload_bytes);

    uint32_t slot_count() const { return static_cast<uint32_t>(slots_.size()); }
    uint32_t occupancy() const { return occupancy_; }
    uint32_t peak_occupancy() const { return peak_; }
    uint64_t slots_scanned() const { return scanned_; }

    const std::vector<OramBlock>& slots() const { return slots_; }

    // Removes and returns the block with this bid, if present.
    std::optional<OramBlock> take(uint32_t bid);

    // Places a real block into a free slot; throws StashOverflow if full.
    void insert(const OramBlock& block);

    // Same scan as insert, but only places the block when `enabled` (keeps the
    // touch trace identical for hit and miss accesses).
    void insert_if(const OramBlock& block, bool enabled);

    // Places every pending block into free slots in one pass over the stash.
    void insert_all(std::vector<OramBlock>&& pending);

    // Moves up to max_take real blocks that may reside at `depth` on the path
    // to `path_leaf` into `out` (greedy eviction helper).
    size_t take_eligible(uint32_t path_leaf, uint32_t height, uint32_t depth, size_t max_take,
                         std::vector<OramBlock>& out);

    // Deepest position (1-based; 0 = none) any resident block can reach on the
    // path to `path_leaf`.
    int deepest_reach(uint32_t path_leaf, uint32_t height) const;

    // Removes and returns the deepest-reaching resident block when `enabled`;
    // performs the identical scan either way.
    std::optional<OramBlock> take_deepest(uint32_t path_leaf, uint32_t height, bool enabled);

    // Serialization of the real blocks only (order-insensitive state).
    std::vector<OramBlock> real_blocks() const;
    void restore(const std::vector<OramBlock>& blocks);

  private:
    void free_slot(size_t i);

    std::vector<OramBlock> slots_;
    uint32_t payload_bytes_;
    uint32_t occupancy_ = 0;
    uint32_t peak_ = 0;
    mutable uint64_t scanned_ = 0;
};

}  // namespace t3::oram
