#pragma once

#include "t3/oram/params.hpp"
#include "t3/oram/stash.hpp"
#include "t3/oram/tree.hpp"

#include <functional>
#include <optional>
#include <random>

namespace t3::oram {

enum class PathKind : uint8_t { Read, Evict, ReadOnce };

struct PathEvent {
    uint8_t level; // 0 = data tree, k >= 1 = position-map tree k
    PathKind kind;
    uint32_t leaf;
};

struct AccessStats {
    uint64_t tree_slots = 0;  // slots sealed or opened
    uint64_t stash_slots = 0; // stash slots scanned
    std::vector<PathEvent> paths;
};

// One ORAM client: data tree plus recursive position-map trees, ending in a
// plaintext top map within the fixed budget. All mutating operations are
// single-writer; read_once is const and safe for concurrent callers against
// an immutable instance.
class Oram {
  public:
    struct LevelPlan {
        uint32_t logical_count; // blocks actually addressable at this level
        uint32_t capacity;      // tree capacity (power of two >= logical_count)
        uint32_t payload_bytes;
    };

    // Level 0 is the data tree; levels 1..M hold chi leaf labels per block for
    // the level below. Recursion stops once the remaining map fits the
    // plaintext budget.
    static std::vector<LevelPlan> plan_levels(const OramParams& params);

    static Oram init(const OramParams& params, uint64_t seed, const Key256& master_key);

    // Standard access: position-map chain with remapping at every level,
    // path read, stash merge, optional payload replacement, eviction.
    // Returns the pre-write payload (zeros for a never-written bid).
    Bytes access(OpKind op, uint32_t bid, ByteSpan new_payload = {});

    // Standard access whose payload change is an arbitrary in-place transform,
    // applied between fetch and write-back (one access, not read + write).
    // `mutate(payload, present)` sees zeros when the bid has no block yet; a
    // missing block is only created when materialize_on_miss is set.
    Bytes access_mutate(uint32_t bid, const std::function<void(Bytes&, bool)>& mutate,
                        bool materialize_on_miss);

    // Path read with no eviction and no state mutation anywhere; target block
    // selected obliviously from the union of stash and fetched path.
    Bytes read_once(uint32_t bid, AccessStats* stats = nullptr) const;

    uint32_t posmap_lookup(uint32_t bid);              // pattern-hiding, remaps map blocks
    void posmap_update(uint32_t bid, uint32_t new_leaf);
    uint32_t posmap_peek(uint32_t bid) const;          // read-only traversal

    const OramParams& params() const { return params_; }
    size_t level_count() const { return levels_.size(); }
    size_t map_level_count() const { return levels_.size() - 1; }
    const OramTree& tree(size_t level = 0) const { return levels_[level].tree; }
    const Stash& stash(size_t level = 0) const { return levels_[level].stash; }
    const std::vector<uint32_t>& top_map() const { return top_map_; }
    const AccessStats& last_access_stats() const { return last_stats_; }

    // Persistence: tree files <base>.tree / <base>.tree.mht plus
    // <base>.pm<k>.tree sidecar pairs; everything else (stashes, top map,
    // counters, trusted roots) travels in the state blob, which the caller
    // must keep sealed.
    void save(const std::filesystem::path& dir, const std::string& base) const;
    Bytes state_blob() const;
    static Oram load(const std::filesystem::path& dir, const std::string& base,
                     const OramParams& params, ByteSpan state, const Key256& master_key);

    static std::filesystem::path tree_file(const std::filesystem::path& dir,
                                           const std::string& base, size_t level);

  private:
    struct Level {
        LevelPlan plan;
        OramTree tree;
        Stash stash;
        uint64_t evict_count = 0; // reverse-lexicographic eviction cursor
    };

    Oram() = default;

    Bytes level_access(size_t lvl, uint32_t id, uint32_t old_leaf, uint32_t new_leaf,
                       const std::function<void(Bytes&, bool)>& mutate, bool materialize_on_miss);
    void evict_once(size_t lvl, uint32_t eviction_leaf);
    std::pair<Bytes, bool> fetch_read_only(size_t lvl, uint32_t id, uint32_t leaf,
                                           AccessStats* stats) const;

    // Walks the map chain for bid; every touched map block is remapped. The
    // data-level entry is replaced only when new_data_leaf is set. Returns the
    // data leaf recorded before any replacement.
    uint32_t posmap_access(uint32_t bid, std::optional<uint32_t> new_data_leaf);
    uint32_t peek_leaf(uint32_t bid, AccessStats* stats) const;

    uint32_t initial_leaf(size_t lvl, uint32_t id) const;
    void synth_entries(size_t child_lvl, uint32_t block_id, Bytes& payload) const;
    uint32_t sample_leaf(size_t lvl);
    uint64_t chi_pow(size_t k) const;

    OramParams params_;
    std::vector<Level> levels_;
    std::vector<uint32_t> top_map_;
    Key256 leaf_prf_key_{};
    std::mt19937_64 rng_;
    AccessStats last_stats_;
};

}  // namespace t3::oram
