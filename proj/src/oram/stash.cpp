#include "t3/oram/stash.hpp"

namespace t3::oram {

Stash::Stash(uint32_t slot_count, uint32_t payload_bytes) : payload_bytes_(payload_bytes) {
    slots_.assign(slot_count, OramBlock::dummy(payload_bytes));
}

void Stash::free_slot(size_t i) {
    slots_[i].bid = kDummyBid;
    slots_[i].leaf = 0;
    std::fill(slots_[i].payload.begin(), slots_[i].payload.end(), 0);
    --occupancy_;
}

std::optional<OramBlock> Stash::take(uint32_t bid) {
    scanned_ += slots_.size();
    std::optional<OramBlock> found;
    for (size_t i = 0; i < slots_.size(); ++i) {
        if (!slots_[i].is_dummy() && slots_[i].bid == bid) {
            found = slots_[i];
            free_slot(i);
        }
    }
    return found;
}

void Stash::insert(const OramBlock& block) { insert_if(block, true); }

void Stash::insert_if(const OramBlock& block, bool enabled) {
    scanned_ += slots_.size();
    bool placed = false;
    for (size_t i = 0; i < slots_.size(); ++i) {
        if (enabled && !placed && slots_[i].is_dummy()) {
            slots_[i] = block;
            placed = true;
            ++occupancy_;
        }
    }
    if (enabled && !placed) throw StashOverflow("stash occupancy limit exceeded");
    peak_ = std::max(peak_, occupancy_);
}

void Stash::insert_all(std::vector<OramBlock>&& pending) {
    scanned_ += slots_.size();
    size_t next = 0;
    for (size_t i = 0; i < slots_.size() && next < pending.size(); ++i) {
        if (slots_[i].is_dummy()) {
            slots_[i] = std::move(pending[next++]);
            ++occupancy_;
        }
    }
    if (next < pending.size()) throw StashOverflow("stash occupancy limit exceeded");
    peak_ = std::max(peak_, occupancy_);
}

size_t Stash::take_eligible(uint32_t path_leaf, uint32_t height, uint32_t depth, size_t max_take,
                            std::vector<OramBlock>& out) {
    scanned_ += slots_.size();
    size_t taken = 0;
    for (size_t i = 0; i < slots_.size(); ++i) {
        if (taken < max_take && !slots_[i].is_dummy() &&
            common_depth(slots_[i].leaf, path_leaf, height) >= depth) {
            out.push_back(slots_[i]);
            free_slot(i);
            ++taken;
        }
    }
    return taken;
}

int Stash::deepest_reach(uint32_t path_leaf, uint32_t height) const {
    scanned_ += slots_.size();
    int best = 0;
    for (const auto& s : slots_)
        if (!s.is_dummy())
            best = std::max(best, 1 + static_cast<int>(common_depth(s.leaf, path_leaf, height)));
    return best;
}

std::optional<OramBlock> Stash::take_deepest(uint32_t path_leaf, uint32_t height, bool enabled) {
    scanned_ += slots_.size();
    int best = -1;
    size_t best_i = 0;
    for (size_t i = 0; i < slots_.size(); ++i) {
        if (!slots_[i].is_dummy()) {
            int r = 1 + static_cast<int>(common_depth(slots_[i].leaf, path_leaf, height));
            if (r > best) {
                best = r;
                best_i = i;
            }
        }
    }
    if (!enabled || best < 0) return std::nullopt;
    OramBlock b = slots_[best_i];
    free_slot(best_i);
    return b;
}

std::vector<OramBlock> Stash::real_blocks() const {
    std::vector<OramBlock> out;
    for (const auto& s : slots_)
        if (!s.is_dummy()) out.push_back(s);
    return out;
}

void Stash::restore(const std::vector<OramBlock>& blocks) {
    slots_.assign(slots_.size(), OramBlock::dummy(payload_bytes_));
    occupancy_ = 0;
    for (const auto& b : blocks) insert(b);
}

}  // namespace t3::oram
