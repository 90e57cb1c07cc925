#pragma once

#include "t3/chain/tx.hpp"
#include "t3/oram/oram.hpp"
#include "t3/utxo/oblock.hpp"

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

namespace t3::store {

struct Unavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadProof : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateRead : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Phase : uint8_t { Building, Serving, Updating, Syncing };

const char* phase_name(Phase p);

struct StoreConfig {
    uint32_t n = 1u << 12;  // oblock count, power of two
    uint32_t z = 0;         // bucket slots; 0 = strategy default
    oram::Strategy strategy = oram::Strategy::CircuitOram;
    uint32_t max_out = 2;   // records returned per block read
    // Fixed mode routes every address over `delta` blocks. Client mode
    // routes inserts over delta_max and lets each query choose how many
    // of those blocks to fetch (full retrieval only at delta_max).
    uint32_t delta = 1;
    uint32_t delta_max = 4;
    bool client_delta = false;
    bool reject_duplicates = false;  // strict duplicate-read policy
    uint32_t records_per_block = 8;
    size_t parked_limit = 10000;  // readers allowed to wait out a sync
    uint64_t seed = 0;            // 0 = random keys and placement
};

struct ReadResult {
    std::vector<utxo::UtxoRecord> records;  // delta * max_out, dummy-padded
    uint64_t interval = 0;
    // (bid, data-tree leaf) per fetched block, for access-pattern logs.
    std::vector<std::pair<uint32_t, uint32_t>> touched;
};

struct UpdateSummary {
    uint64_t spends_applied = 0;
    uint64_t spends_unmatched = 0;
    uint64_t creates_applied = 0;
    uint64_t creates_dropped = 0;  // block at capacity; counted, not fatal
    uint64_t evictions_drained = 0;
    uint64_t interval = 0;  // interval in force after the sync
};

// Two-tree orchestrator. Reads run as read-once path fetches against an
// immutable snapshot; every served bid is queued for eviction on the
// original tree, which also takes the per-block update batches. A sync
// barrier drains the queue and replaces the snapshot with a copy of the
// original, opening the next interval.
//
// Thread roles: any number of reader threads may call serve_read; all
// other operations belong to the single writer/manager context.
class TwoTreeStore {
public:
    TwoTreeStore() = default;
    TwoTreeStore(const TwoTreeStore&) = delete;
    TwoTreeStore& operator=(const TwoTreeStore&) = delete;

    void init(const StoreConfig& cfg);

    // Initial population: batches update the original tree and bump the
    // interval, but no snapshot is cut until finish_init.
    UpdateSummary apply_batch_initial(const chain::UpdateBatch& batch);
    void finish_init();

    ReadResult serve_read(const Hash160& pkh, uint32_t delta_req = 0);

    UpdateSummary apply_block(const chain::UpdateBatch& batch);

    // Pops up to `limit` queued bids (0 = all) and re-accesses them on
    // the original tree, remapping their leaves. Writer context only.
    uint64_t drain_evictions(size_t limit = 0);

    uint64_t interval() const;
    Phase phase() const;
    size_t eviction_queue_depth() const;
    size_t parked_peak() const;
    const StoreConfig& config() const { return cfg_; }
    const Key256& master_key() const { return master_; }
    const Key256& oblock_key() const { return kb_; }

    const oram::Oram& snapshot_oram() const { return *snapshot_; }
    const oram::Oram& original_oram() const { return *original_; }

    // Binding a directory makes every sync persist both tree files;
    // save() additionally writes the sealed state blob.
    void bind_dir(const std::filesystem::path& dir, bool persist_each_sync);
    void save(const std::filesystem::path& dir);
    static std::unique_ptr<TwoTreeStore> load(const std::filesystem::path& dir,
                                              const Key256& master);

    // Routing used for both inserts and reads; exposed for tests.
    std::vector<uint32_t> read_bids(const Hash160& pkh, uint32_t delta) const;
    uint32_t insert_bid(const Hash160& pkh, const Hash256& txid, uint32_t vout) const;
    uint32_t insert_delta() const;

    static constexpr const char* kOriginalBase = "original";
    static constexpr const char* kSnapshotBase = "snapshot";
    static constexpr const char* kStateFile = "state.bin";

private:
    oram::OramParams oram_params() const;
    void apply_batch_writer(const chain::UpdateBatch& batch, UpdateSummary& s);
    uint64_t drain_all_unlocked();
    void sync_copy_and_persist();

    StoreConfig cfg_;
    Key256 master_{};
    Key256 kb_{};
    std::optional<oram::Oram> original_;
    std::optional<oram::Oram> snapshot_;

    mutable std::mutex mx_;
    std::condition_variable cv_;
    Phase phase_ = Phase::Building;
    uint64_t interval_ = 0;
    size_t active_readers_ = 0;
    size_t parked_ = 0;
    size_t parked_peak_ = 0;
    std::deque<uint32_t> evict_queue_;
    std::set<uint32_t> served_bids_;  // strict-mode duplicate tracking

    std::filesystem::path dir_;
    bool persist_each_sync_ = false;
};

}  // namespace t3::store
