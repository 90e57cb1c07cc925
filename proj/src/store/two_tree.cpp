#include "t3/store/two_tree.hpp"

#include "t3/crypto.hpp"

#include <cstring>
#include <fstream>

namespace t3::store {

namespace {

constexpr char kStateMagic[8] = {'T', '3', 'S', 'T', 'A', 'T', 'E', '1'};
constexpr char kStateAad[] = "t3-state-v1";

Key256 derive(const Key256& base, const char* label) {
    Hash256 h = crypto::hmac_sha256(ByteSpan(base.data(), base.size()),
                                    ByteSpan(reinterpret_cast<const uint8_t*>(label),
                                             std::strlen(label)));
    Key256 k;
    std::memcpy(k.data(), h.data(), 32);
    return k;
}

void put_blob(Bytes& out, ByteSpan blob) {
    out.resize(out.size() + 4);
    put_u32be(out.data() + out.size() - 4, static_cast<uint32_t>(blob.size()));
    out.insert(out.end(), blob.begin(), blob.end());
}

ByteSpan take_blob(ByteSpan raw, size_t& pos) {
    if (raw.size() - pos < 4) throw std::runtime_error("truncated state blob");
    uint32_t len = get_u32be(raw.data() + pos);
    pos += 4;
    if (raw.size() - pos < len) throw std::runtime_error("truncated state blob");
    ByteSpan b(raw.data() + pos, len);
    pos += len;
    return b;
}

}  // namespace

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Building: return "building";
        case Phase::Serving: return "serving";
        case Phase::Updating: return "updating";
        case Phase::Syncing: return "syncing";
    }
    return "?";
}

oram::OramParams TwoTreeStore::oram_params() const {
    oram::OramParams p;
    p.capacity_n = cfg_.n;
    p.bucket_z = cfg_.z;
    p.payload_bytes = utxo::payload_size(cfg_.records_per_block);
    p.strategy = cfg_.strategy;
    return p;
}

void TwoTreeStore::init(const StoreConfig& cfg) {
    cfg_ = cfg;
    if (cfg_.delta < 1 || cfg_.delta > cfg_.delta_max)
        throw std::invalid_argument("delta outside [1, delta_max]");
    if (cfg_.max_out < 1 || cfg_.records_per_block < 1)
        throw std::invalid_argument("max_out and records_per_block must be positive");
    uint64_t seed;
    if (cfg_.seed != 0) {
        uint8_t seed_bytes[8];
        put_u64be(seed_bytes, cfg_.seed);
        Hash256 h = crypto::hmac_sha256(ByteSpan(seed_bytes, 8),
                                        ByteSpan(reinterpret_cast<const uint8_t*>("t3-master"), 9));
        std::memcpy(master_.data(), h.data(), 32);
        seed = cfg_.seed;
    } else {
        master_ = crypto::random_key();
        uint8_t r[8];
        crypto::random_bytes(r, sizeof r);
        seed = get_u64be(r);
    }
    kb_ = derive(master_, "oblock-prf");
    original_ = oram::Oram::init(oram_params(), seed, master_);
    snapshot_ = *original_;
    phase_ = Phase::Building;
    interval_ = 0;
}

uint32_t TwoTreeStore::insert_delta() const {
    return cfg_.client_delta ? cfg_.delta_max : cfg_.delta;
}

std::vector<uint32_t> TwoTreeStore::read_bids(const Hash160& pkh, uint32_t delta) const {
    if (delta == 1 && !cfg_.client_delta && cfg_.delta == 1)
        return {utxo::oblock_map(pkh, kb_, cfg_.n)};
    auto all = utxo::oblock_map_multi(pkh, kb_, insert_delta(), cfg_.n, cfg_.delta_max);
    all.resize(delta);
    return all;
}

uint32_t TwoTreeStore::insert_bid(const Hash160& pkh, const Hash256& txid, uint32_t vout) const {
    uint32_t d = insert_delta();
    if (d == 1 && !cfg_.client_delta)
        return utxo::oblock_map(pkh, kb_, cfg_.n);
    auto bids = utxo::oblock_map_multi(pkh, kb_, d, cfg_.n, cfg_.delta_max);
    return bids[utxo::oblock_route(pkh, txid, vout, kb_, d)];
}

void TwoTreeStore::apply_batch_writer(const chain::UpdateBatch& batch, UpdateSummary& s) {
    for (const auto& sp : batch.spends) {
        uint32_t bid = insert_bid(sp.pkh, sp.txid, sp.vout);
        bool removed = false;
        original_->access_mutate(
            bid,
            [&](Bytes& payload, bool present) {
                if (present) removed = utxo::remove(payload, sp.txid, sp.vout);
            },
            false);
        if (removed)
            ++s.spends_applied;
        else
            ++s.spends_unmatched;
    }
    for (const auto& rec : batch.creates) {
        uint32_t bid = insert_bid(rec.pkh, rec.txid, rec.vout);
        bool inserted = false;
        original_->access_mutate(
            bid,
            [&](Bytes& payload, bool present) {
                (void)present;
                inserted = utxo::try_insert(payload, rec);
            },
            true);
        if (inserted)
            ++s.creates_applied;
        else
            ++s.creates_dropped;
    }
}

UpdateSummary TwoTreeStore::apply_batch_initial(const chain::UpdateBatch& batch) {
    if (phase_ != Phase::Building) throw std::logic_error("initial batches only before finish_init");
    UpdateSummary s;
    apply_batch_writer(batch, s);
    ++interval_;
    s.interval = interval_;
    return s;
}

void TwoTreeStore::finish_init() {
    if (phase_ != Phase::Building) throw std::logic_error("finish_init called twice");
    sync_copy_and_persist();
    std::lock_guard lk(mx_);
    phase_ = Phase::Serving;
}

ReadResult TwoTreeStore::serve_read(const Hash160& pkh, uint32_t delta_req) {
    uint32_t delta = cfg_.client_delta ? (delta_req ? delta_req : cfg_.delta) : cfg_.delta;
    if (delta < 1 || delta > cfg_.delta_max) throw std::invalid_argument("delta out of range");
    std::vector<uint32_t> bids = read_bids(pkh, delta);

    ReadResult result;
    {
        std::unique_lock lk(mx_);
        while (phase_ == Phase::Syncing) {
            if (parked_ >= cfg_.parked_limit) throw Unavailable("sync backlog full");
            ++parked_;
            parked_peak_ = std::max(parked_peak_, parked_);
            cv_.wait(lk);
            --parked_;
        }
        if (phase_ == Phase::Building) throw Unavailable("store is still initializing");
        if (cfg_.reject_duplicates) {
            for (uint32_t bid : bids)
                if (served_bids_.count(bid))
                    throw DuplicateRead("block already read this interval");
            for (uint32_t bid : bids) served_bids_.insert(bid);
        }
        ++active_readers_;
        result.interval = interval_;
    }

    // Snapshot reads proceed outside the lock: the tree is immutable
    // until the sync barrier has seen active_readers_ drain to zero.
    try {
        for (uint32_t bid : bids) {
            oram::AccessStats stats;
            Bytes payload = snapshot_->read_once(bid, &stats);
            uint32_t leaf = 0;
            for (const auto& ev : stats.paths)
                if (ev.level == 0) leaf = ev.leaf;
            result.touched.emplace_back(bid, leaf);
            auto recs = utxo::extract(payload, pkh, cfg_.max_out);
            result.records.insert(result.records.end(), recs.begin(), recs.end());
        }
    } catch (...) {
        std::lock_guard lk(mx_);
        --active_readers_;
        cv_.notify_all();
        throw;
    }

    {
        std::lock_guard lk(mx_);
        --active_readers_;
        for (uint32_t bid : bids) evict_queue_.push_back(bid);
        cv_.notify_all();
    }
    return result;
}

uint64_t TwoTreeStore::drain_evictions(size_t limit) {
    uint64_t drained = 0;
    for (;;) {
        uint32_t bid;
        {
            std::lock_guard lk(mx_);
            if (evict_queue_.empty()) break;
            bid = evict_queue_.front();
            evict_queue_.pop_front();
        }
        original_->access(oram::OpKind::Read, bid);
        ++drained;
        if (limit && drained >= limit) break;
    }
    return drained;
}

uint64_t TwoTreeStore::drain_all_unlocked() {
    uint64_t drained = 0;
    while (!evict_queue_.empty()) {
        uint32_t bid = evict_queue_.front();
        evict_queue_.pop_front();
        original_->access(oram::OpKind::Read, bid);
        ++drained;
    }
    return drained;
}

void TwoTreeStore::sync_copy_and_persist() {
    snapshot_ = *original_;
    if (!dir_.empty() && persist_each_sync_) {
        original_->save(dir_, kOriginalBase);
        snapshot_->save(dir_, kSnapshotBase);
    }
}

UpdateSummary TwoTreeStore::apply_block(const chain::UpdateBatch& batch) {
    {
        std::lock_guard lk(mx_);
        if (phase_ != Phase::Serving) throw std::logic_error("apply_block outside Serving");
        phase_ = Phase::Updating;
    }
    UpdateSummary s;
    apply_batch_writer(batch, s);  // reads continue on the snapshot

    std::unique_lock lk(mx_);
    phase_ = Phase::Syncing;
    cv_.wait(lk, [&] { return active_readers_ == 0; });
    // New readers park on the phase; the queue is now exclusively ours.
    lk.unlock();
    s.evictions_drained = drain_all_unlocked();
    sync_copy_and_persist();
    lk.lock();
    ++interval_;
    served_bids_.clear();
    s.interval = interval_;
    phase_ = Phase::Serving;
    cv_.notify_all();
    return s;
}

uint64_t TwoTreeStore::interval() const {
    std::lock_guard lk(mx_);
    return interval_;
}

Phase TwoTreeStore::phase() const {
    std::lock_guard lk(mx_);
    return phase_;
}

size_t TwoTreeStore::eviction_queue_depth() const {
    std::lock_guard lk(mx_);
    return evict_queue_.size();
}

size_t TwoTreeStore::parked_peak() const {
    std::lock_guard lk(mx_);
    return parked_peak_;
}

void TwoTreeStore::bind_dir(const std::filesystem::path& dir, bool persist_each_sync) {
    std::filesystem::create_directories(dir);
    dir_ = dir;
    persist_each_sync_ = persist_each_sync;
}

void TwoTreeStore::save(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    // Quiesce: remap everything still queued, then cut a fresh snapshot
    // so both persisted trees are byte-identical.
    drain_evictions(0);
    snapshot_ = *original_;
    original_->save(dir, kOriginalBase);
    snapshot_->save(dir, kSnapshotBase);

    Bytes blob;
    blob.insert(blob.end(), kStateMagic, kStateMagic + 8);
    Bytes cfgb(44);
    size_t o = 0;
    put_u32be(cfgb.data() + o, cfg_.n), o += 4;
    put_u32be(cfgb.data() + o, cfg_.z), o += 4;
    cfgb[o++] = static_cast<uint8_t>(cfg_.strategy == oram::Strategy::CircuitOram ? 1 : 0);
    put_u32be(cfgb.data() + o, cfg_.max_out), o += 4;
    put_u32be(cfgb.data() + o, cfg_.delta), o += 4;
    put_u32be(cfgb.data() + o, cfg_.delta_max), o += 4;
    cfgb[o++] = static_cast<uint8_t>((cfg_.client_delta ? 1 : 0) | (cfg_.reject_duplicates ? 2 : 0));
    put_u32be(cfgb.data() + o, cfg_.records_per_block), o += 4;
    put_u64be(cfgb.data() + o, cfg_.parked_limit), o += 8;
    put_u64be(cfgb.data() + o, cfg_.seed), o += 8;
    cfgb.resize(o);
    put_blob(blob, cfgb);
    blob.insert(blob.end(), kb_.begin(), kb_.end());
    Bytes iv(8);
    put_u64be(iv.data(), interval_);
    blob.insert(blob.end(), iv.begin(), iv.end());
    put_blob(blob, original_->state_blob());
    put_blob(blob, snapshot_->state_blob());

    Key256 blob_key = derive(master_, "state-blob");
    std::array<uint8_t, crypto::kAeadNonceSize> nonce{};
    crypto::random_bytes(nonce.data(), nonce.size());
    Bytes sealed =
        crypto::aead_seal(blob_key, nonce, blob,
                          ByteSpan(reinterpret_cast<const uint8_t*>(kStateAad),
                                   std::strlen(kStateAad)));
    std::ofstream f(dir / kStateFile, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write state file");
    f.write(reinterpret_cast<const char*>(nonce.data()), static_cast<std::streamsize>(nonce.size()));
    f.write(reinterpret_cast<const char*>(sealed.data()), static_cast<std::streamsize>(sealed.size()));
}

std::unique_ptr<TwoTreeStore> TwoTreeStore::load(const std::filesystem::path& dir,
                                                 const Key256& master) {
    std::ifstream f(dir / kStateFile, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open state file in " + dir.string());
    Bytes raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (raw.size() < crypto::kAeadNonceSize + crypto::kAeadTagSize)
        throw std::runtime_error("state file truncated");
    Key256 blob_key = derive(master, "state-blob");
    std::array<uint8_t, crypto::kAeadNonceSize> nonce{};
    std::memcpy(nonce.data(), raw.data(), nonce.size());
    auto blob = crypto::aead_open(blob_key, nonce,
                                  ByteSpan(raw.data() + crypto::kAeadNonceSize,
                                           raw.size() - crypto::kAeadNonceSize),
                                  ByteSpan(reinterpret_cast<const uint8_t*>(kStateAad),
                                           std::strlen(kStateAad)));
    if (!blob) throw oram::IntegrityViolation("state blob authentication failed");

    size_t pos = 0;
    if (blob->size() < 8 || std::memcmp(blob->data(), kStateMagic, 8) != 0)
        throw std::runtime_error("bad state magic");
    pos = 8;
    ByteSpan cfgb = take_blob(*blob, pos);
    if (cfgb.size() != 42) throw std::runtime_error("bad config block");
    auto store = std::make_unique<TwoTreeStore>();
    StoreConfig cfg;
    size_t o = 0;
    cfg.n = get_u32be(cfgb.data() + o), o += 4;
    cfg.z = get_u32be(cfgb.data() + o), o += 4;
    cfg.strategy = cfgb[o++] ? oram::Strategy::CircuitOram : oram::Strategy::PathOram;
    cfg.max_out = get_u32be(cfgb.data() + o), o += 4;
    cfg.delta = get_u32be(cfgb.data() + o), o += 4;
    cfg.delta_max = get_u32be(cfgb.data() + o), o += 4;
    uint8_t flags = cfgb[o++];
    cfg.client_delta = flags & 1;
    cfg.reject_duplicates = flags & 2;
    cfg.records_per_block = get_u32be(cfgb.data() + o), o += 4;
    cfg.parked_limit = get_u64be(cfgb.data() + o), o += 8;
    cfg.seed = get_u64be(cfgb.data() + o), o += 8;
    store->cfg_ = cfg;
    store->master_ = master;

    if (blob->size() - pos < 40) throw std::runtime_error("truncated state blob");
    std::memcpy(store->kb_.data(), blob->data() + pos, 32);
    pos += 32;
    store->interval_ = get_u64be(blob->data() + pos);
    pos += 8;
    ByteSpan oblob = take_blob(*blob, pos);
    ByteSpan sblob = take_blob(*blob, pos);

    store->original_ = oram::Oram::load(dir, kOriginalBase, store->oram_params(), oblob, master);
    store->snapshot_ = oram::Oram::load(dir, kSnapshotBase, store->oram_params(), sblob, master);
    store->phase_ = Phase::Serving;
    return store;
}

}  // namespace t3::store
