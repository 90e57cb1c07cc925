#include "t3/oram/oram.hpp"

#include "t3/crypto.hpp"
#include "t3/enclave/oblivious.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace t3::oram {

namespace {

Key256 level_key(const Key256& master, size_t lvl) {
    uint8_t msg[12] = {'t', 'r', 'e', 'e', '-', 'k', 'e', 'y', '-', 0, 0, 0};
    msg[9] = static_cast<uint8_t>(lvl);
    return crypto::hmac_sha256(ByteSpan(master.data(), master.size()), ByteSpan(msg, sizeof(msg)));
}

size_t real_count(const std::vector<OramBlock>& bucket) {
    size_t n = 0;
    for (const auto& b : bucket)
        if (!b.is_dummy()) ++n;
    return n;
}

}  // namespace

std::vector<Oram::LevelPlan> Oram::plan_levels(const OramParams& raw) {
    OramParams p = raw.normalized();
    std::vector<LevelPlan> plans;
    plans.push_back({p.capacity_n, p.capacity_n, p.payload_bytes});
    uint64_t need = p.capacity_n; // labels required for the last level's blocks
    while (need * kLeafEntryBytes > kTopMapBudgetBytes) {
        uint32_t logical = static_cast<uint32_t>((need + p.recursion_chi - 1) / p.recursion_chi);
        uint32_t cap = std::max<uint32_t>(2, std::bit_ceil(logical));
        plans.push_back({logical, cap, p.recursion_chi * kLeafEntryBytes});
        need = logical;
    }
    return plans;
}

Oram Oram::init(const OramParams& raw, uint64_t seed, const Key256& master_key) {
    OramParams p = raw.normalized();
    Oram o;
    o.params_ = p;
    auto plans = plan_levels(p);
    for (size_t i = 0; i < plans.size(); ++i) {
        const auto& pl = plans[i];
        uint32_t max_stash =
            i == 0 ? p.max_stash : 2 * OramParams::height_for(pl.capacity) * p.bucket_z;
        o.levels_.push_back(Level{pl, OramTree(pl.capacity, p.bucket_z, pl.payload_bytes,
                                               level_key(master_key, i)),
                                  Stash(max_stash, pl.payload_bytes), 0});
    }
    uint8_t seed_bytes[8];
    put_u64be(seed_bytes, seed);
    static constexpr char kLeafInfo[] = "leaf-label-prf";
    o.leaf_prf_key_ = crypto::hmac_sha256(
        ByteSpan(seed_bytes, 8),
        ByteSpan(reinterpret_cast<const uint8_t*>(kLeafInfo), sizeof(kLeafInfo) - 1));
    o.rng_.seed(seed);
    o.top_map_.resize(plans.back().logical_count);
    for (uint32_t j = 0; j < o.top_map_.size(); ++j)
        o.top_map_[j] = o.initial_leaf(plans.size() - 1, j);
    return o;
}

uint32_t Oram::initial_leaf(size_t lvl, uint32_t id) const {
    uint8_t msg[7] = {'l', 'f', static_cast<uint8_t>(lvl), 0, 0, 0, 0};
    put_u32be(msg + 3, id);
    Hash256 h = crypto::hmac_sha256(ByteSpan(leaf_prf_key_.data(), leaf_prf_key_.size()),
                                    ByteSpan(msg, sizeof(msg)));
    return static_cast<uint32_t>(get_u64be(h.data()) & (levels_[lvl].plan.capacity - 1));
}

void Oram::synth_entries(size_t child_lvl, uint32_t block_id, Bytes& payload) const {
    uint32_t chi = params_.recursion_chi;
    for (uint32_t i = 0; i < chi; ++i) {
        uint64_t child = static_cast<uint64_t>(block_id) * chi + i;
        if (child < levels_[child_lvl].plan.logical_count)
            put_u32be(payload.data() + size_t(4) * i,
                      initial_leaf(child_lvl, static_cast<uint32_t>(child)));
    }
}

uint32_t Oram::sample_leaf(size_t lvl) {
    return static_cast<uint32_t>(rng_() & (levels_[lvl].plan.capacity - 1));
}

uint64_t Oram::chi_pow(size_t k) const {
    uint64_t v = 1;
    for (size_t i = 0; i < k; ++i) v *= params_.recursion_chi;
    return v;
}

Bytes Oram::level_access(size_t lvl, uint32_t id, uint32_t old_leaf, uint32_t new_leaf,
                         const std::function<void(Bytes&, bool)>& mutate,
                         bool materialize_on_miss) {
    Level& L = levels_[lvl];
    const uint32_t h = L.tree.height();
    const uint32_t z = L.tree.bucket_z();

    auto buckets = L.tree.read_path(old_leaf);
    last_stats_.tree_slots += buckets.size() * z;
    last_stats_.paths.push_back({static_cast<uint8_t>(lvl), PathKind::Read, old_leaf});

    std::optional<OramBlock> target = L.stash.take(id);

    if (params_.strategy == Strategy::PathOram) {
        // Merge the whole path into the stash, pulling the target aside.
        std::vector<OramBlock> pending;
        for (auto& bucket : buckets)
            for (auto& slot : bucket) {
                if (slot.is_dummy()) continue;
                if (slot.bid == id)
                    target = std::move(slot);
                else
                    pending.push_back(std::move(slot));
            }
        L.stash.insert_all(std::move(pending));

        bool present = target.has_value();
        Bytes payload = present ? std::move(target->payload) : Bytes(L.plan.payload_bytes, 0);
        Bytes pre = payload;
        mutate(payload, present);
        L.stash.insert_if(OramBlock{id, new_leaf, std::move(payload)},
                          present || materialize_on_miss);

        // Greedy write-back onto the path just read, deepest buckets first.
        std::vector<std::vector<OramBlock>> out(buckets.size());
        for (size_t d = out.size(); d-- > 0;) {
            out[d].reserve(z);
            L.stash.take_eligible(old_leaf, h, static_cast<uint32_t>(d), z, out[d]);
        }
        L.tree.write_path(old_leaf, out);
        last_stats_.tree_slots += out.size() * z;
        return pre;
    }

    // Circuit: remove only the target from the path, rewrite it, then run the
    // two deterministic reverse-lexicographic evictions.
    for (auto& bucket : buckets)
        for (auto& slot : bucket) {
            if (!slot.is_dummy() && slot.bid == id) {
                target = std::move(slot);
                slot = OramBlock::dummy(L.plan.payload_bytes);
            }
        }
    L.tree.write_path(old_leaf, buckets);
    last_stats_.tree_slots += buckets.size() * z;

    bool present = target.has_value();
    Bytes payload = present ? std::move(target->payload) : Bytes(L.plan.payload_bytes, 0);
    Bytes pre = payload;
    mutate(payload, present);
    L.stash.insert_if(OramBlock{id, new_leaf, std::move(payload)}, present || materialize_on_miss);

    for (int rep = 0; rep < 2; ++rep)
        evict_once(lvl, reverse_lex_leaf(L.evict_count++, h));
    return pre;
}

void Oram::evict_once(size_t lvl, uint32_t eviction_leaf) {
    Level& L = levels_[lvl];
    const uint32_t h = L.tree.height();
    const uint32_t z = L.tree.bucket_z();
    const size_t positions = h + 2; // 0 = stash, 1..h+1 = path buckets

    auto buckets = L.tree.read_path(eviction_leaf);
    last_stats_.tree_slots += buckets.size() * z;
    last_stats_.paths.push_back({static_cast<uint8_t>(lvl), PathKind::Evict, eviction_leaf});

    auto reach = [&](const OramBlock& b) {
        return 1 + static_cast<int>(common_depth(b.leaf, eviction_leaf, h));
    };

    // deepest[p]: source position whose block can sink deepest into position p.
    std::vector<int> deepest(positions, -1), target(positions, -1);
    int src = -1, goal = -1;
    {
        int r = L.stash.deepest_reach(eviction_leaf, h);
        if (r > 0) {
            goal = r;
            src = 0;
        }
    }
    for (size_t p = 1; p < positions; ++p) {
        if (goal >= static_cast<int>(p)) deepest[p] = src;
        int best = -1;
        for (const auto& s : buckets[p - 1])
            if (!s.is_dummy()) best = std::max(best, reach(s));
        if (best > goal) {
            goal = best;
            src = static_cast<int>(p);
        }
    }

    // target[p]: destination position of the block leaving position p.
    int dest = -1;
    src = -1;
    for (int p = static_cast<int>(positions) - 1; p >= 0; --p) {
        if (p == src) {
            target[p] = dest;
            dest = -1;
            src = -1;
        }
        bool can_place = p >= 1 && real_count(buckets[p - 1]) < z;
        if (((dest == -1 && can_place) || target[p] != -1) && deepest[p] != -1) {
            src = deepest[p];
            dest = p;
        }
    }

    // Single pass, root to leaf, holding at most one block in flight.
    std::optional<OramBlock> hold;
    dest = -1;
    for (size_t p = 0; p < positions; ++p) {
        std::optional<OramBlock> towrite;
        if (hold && static_cast<int>(p) == dest) {
            towrite = std::move(hold);
            hold.reset();
            dest = -1;
        }
        if (p == 0) {
            auto b = L.stash.take_deepest(eviction_leaf, h, target[0] != -1);
            if (b) {
                hold = std::move(b);
                dest = target[0];
            }
        } else {
            auto& bucket = buckets[p - 1];
            if (target[p] != -1) {
                int best = -1;
                size_t best_i = 0;
                for (size_t i = 0; i < bucket.size(); ++i) {
                    if (!bucket[i].is_dummy() && reach(bucket[i]) > best) {
                        best = reach(bucket[i]);
                        best_i = i;
                    }
                }
                if (best < 0) throw OramError("eviction plan expected a block to move");
                hold = std::move(bucket[best_i]);
                bucket[best_i] = OramBlock::dummy(L.plan.payload_bytes);
                dest = target[p];
            }
            if (towrite) {
                bool placed = false;
                for (auto& s : bucket) {
                    if (!placed && s.is_dummy()) {
                        s = std::move(*towrite);
                        placed = true;
                    }
                }
                if (!placed) throw OramError("eviction plan placed into a full bucket");
            }
        }
    }
    if (hold) throw OramError("eviction pass ended holding a block");

    L.tree.write_path(eviction_leaf, buckets);
    last_stats_.tree_slots += buckets.size() * z;
}

std::pair<Bytes, bool> Oram::fetch_read_only(size_t lvl, uint32_t id, uint32_t leaf,
                                             AccessStats* stats) const {
    const Level& L = levels_[lvl];
    const uint32_t z = L.tree.bucket_z();
    auto buckets = L.tree.read_path(leaf);
    if (stats) {
        stats->tree_slots += buckets.size() * z;
        stats->stash_slots += L.stash.slot_count();
        stats->paths.push_back({static_cast<uint8_t>(lvl), PathKind::ReadOnce, leaf});
    }

    // Flatten stash + path into fixed-stride records and select obliviously.
    const size_t rec = 4 + L.plan.payload_bytes;
    const size_t count = L.stash.slot_count() + buckets.size() * z;
    Bytes scratch(count * rec);
    size_t off = 0;
    auto emit = [&](const OramBlock& b) {
        put_u32be(scratch.data() + off, b.bid);
        std::memcpy(scratch.data() + off + 4, b.payload.data(), L.plan.payload_bytes);
        off += rec;
    };
    for (const auto& s : L.stash.slots()) emit(s);
    for (const auto& bucket : buckets)
        for (const auto& s : bucket) emit(s);

    uint8_t key[4];
    put_u32be(key, id);
    Bytes out(rec, 0);
    put_u32be(out.data(), kDummyBid);
    bool found = enclave::oblivious_select(scratch.data(), count, rec, 0, 4, key, out.data());

    Bytes payload(out.begin() + 4, out.end());
    if (!found) std::fill(payload.begin(), payload.end(), 0);
    return {std::move(payload), found};
}

uint32_t Oram::peek_leaf(uint32_t bid, AccessStats* stats) const {
    const size_t m = levels_.size() - 1;
    uint64_t div = chi_pow(m);
    uint32_t leaf = top_map_[static_cast<size_t>(bid / div)];
    for (size_t k = m; k >= 1; --k) {
        uint64_t div_child = div / params_.recursion_chi;
        uint32_t jk = static_cast<uint32_t>(bid / div);
        uint32_t child = static_cast<uint32_t>(bid / div_child);
        uint32_t e = child % params_.recursion_chi;
        auto [payload, found] = fetch_read_only(k, jk, leaf, stats);
        leaf = found ? get_u32be(payload.data() + size_t(4) * e) : initial_leaf(k - 1, child);
        div = div_child;
    }
    return leaf;
}

uint32_t Oram::posmap_access(uint32_t bid, std::optional<uint32_t> new_data_leaf) {
    const size_t m = levels_.size() - 1;
    std::vector<uint32_t> nl(m + 1);
    for (size_t k = 0; k <= m; ++k) nl[k] = sample_leaf(k);
    if (new_data_leaf) nl[0] = *new_data_leaf;

    uint64_t div = chi_pow(m);
    size_t jtop = static_cast<size_t>(bid / div);
    uint32_t cur = top_map_[jtop];
    top_map_[jtop] = m == 0 ? (new_data_leaf ? *new_data_leaf : cur) : nl[m];

    for (size_t k = m; k >= 1; --k) {
        uint64_t div_child = div / params_.recursion_chi;
        uint32_t jk = static_cast<uint32_t>(bid / div);
        uint32_t child = static_cast<uint32_t>(bid / div_child);
        uint32_t e = child % params_.recursion_chi;
        bool keep_entry = k == 1 && !new_data_leaf; // pure lookup leaves the data leaf alone
        uint32_t next = 0;
        level_access(
            k, jk, cur, nl[k],
            [&](Bytes& p, bool present) {
                if (!present) synth_entries(k - 1, jk, p);
                next = get_u32be(p.data() + size_t(4) * e);
                put_u32be(p.data() + size_t(4) * e, keep_entry ? next : nl[k - 1]);
            },
            true);
        cur = next;
        div = div_child;
    }
    return cur;
}

Bytes Oram::access(OpKind op, uint32_t bid, ByteSpan new_payload) {
    if (op == OpKind::Write && new_payload.size() != params_.payload_bytes)
        throw std::invalid_argument("payload size mismatch");
    return access_mutate(
        bid,
        [&](Bytes& p, bool) {
            if (op == OpKind::Write) std::copy(new_payload.begin(), new_payload.end(), p.begin());
        },
        op == OpKind::Write);
}

Bytes Oram::access_mutate(uint32_t bid, const std::function<void(Bytes&, bool)>& mutate,
                          bool materialize_on_miss) {
    if (bid >= params_.capacity_n) throw std::invalid_argument("bid out of range");
    last_stats_ = {};
    uint64_t scanned0 = 0;
    for (const auto& L : levels_) scanned0 += L.stash.slots_scanned();
    uint32_t nl0 = sample_leaf(0);
    uint32_t old0 = posmap_access(bid, nl0);
    Bytes pre = level_access(0, bid, old0, nl0, mutate, materialize_on_miss);
    for (const auto& L : levels_) last_stats_.stash_slots += L.stash.slots_scanned();
    last_stats_.stash_slots -= scanned0;
    return pre;
}

Bytes Oram::read_once(uint32_t bid, AccessStats* stats) const {
    if (bid >= params_.capacity_n) throw std::invalid_argument("bid out of range");
    uint32_t leaf = peek_leaf(bid, stats);
    auto [payload, found] = fetch_read_only(0, bid, leaf, stats);
    (void)found; // miss is a defined all-zero payload
    return payload;
}

uint32_t Oram::posmap_lookup(uint32_t bid) {
    if (bid >= params_.capacity_n) throw std::invalid_argument("bid out of range");
    last_stats_ = {};
    uint64_t scanned0 = 0;
    for (const auto& L : levels_) scanned0 += L.stash.slots_scanned();
    uint32_t leaf = posmap_access(bid, std::nullopt);
    for (const auto& L : levels_) last_stats_.stash_slots += L.stash.slots_scanned();
    last_stats_.stash_slots -= scanned0;
    return leaf;
}

void Oram::posmap_update(uint32_t bid, uint32_t new_leaf) {
    if (bid >= params_.capacity_n) throw std::invalid_argument("bid out of range");
    if (new_leaf >= params_.capacity_n) throw std::invalid_argument("leaf out of range");
    last_stats_ = {};
    uint64_t scanned0 = 0;
    for (const auto& L : levels_) scanned0 += L.stash.slots_scanned();
    posmap_access(bid, new_leaf);
    for (const auto& L : levels_) last_stats_.stash_slots += L.stash.slots_scanned();
    last_stats_.stash_slots -= scanned0;
}

uint32_t Oram::posmap_peek(uint32_t bid) const {
    if (bid >= params_.capacity_n) throw std::invalid_argument("bid out of range");
    return peek_leaf(bid, nullptr);
}

std::filesystem::path Oram::tree_file(const std::filesystem::path& dir, const std::string& base,
                                      size_t level) {
    if (level == 0) return dir / (base + ".tree");
    return dir / (base + ".pm" + std::to_string(level) + ".tree");
}

void Oram::save(const std::filesystem::path& dir, const std::string& base) const {
    for (size_t i = 0; i < levels_.size(); ++i) {
        auto tf = tree_file(dir, base, i);
        levels_[i].tree.save(tf);
        levels_[i].tree.save_sidecar(tf.string() + ".mht");
    }
}

Bytes Oram::state_blob() const {
    Bytes out;
    auto put32 = [&](uint32_t v) {
        out.resize(out.size() + 4);
        put_u32be(out.data() + out.size() - 4, v);
    };
    auto put64 = [&](uint64_t v) {
        out.resize(out.size() + 8);
        put_u64be(out.data() + out.size() - 8, v);
    };
    put32(1); // version
    put32(static_cast<uint32_t>(levels_.size()));
    out.insert(out.end(), leaf_prf_key_.begin(), leaf_prf_key_.end());
    std::ostringstream rs;
    rs << rng_;
    std::string rng_state = rs.str();
    put32(static_cast<uint32_t>(rng_state.size()));
    out.insert(out.end(), rng_state.begin(), rng_state.end());
    for (const auto& L : levels_) {
        put64(L.evict_count);
        out.insert(out.end(), L.tree.root().begin(), L.tree.root().end());
        auto blocks = L.stash.real_blocks();
        put32(static_cast<uint32_t>(blocks.size()));
        for (const auto& b : blocks) {
            put32(b.bid);
            put32(b.leaf);
            out.insert(out.end(), b.payload.begin(), b.payload.end());
        }
    }
    put32(static_cast<uint32_t>(top_map_.size()));
    for (uint32_t v : top_map_) put32(v);
    return out;
}

Oram Oram::load(const std::filesystem::path& dir, const std::string& base,
                const OramParams& raw, ByteSpan state, const Key256& master_key) {
    OramParams p = raw.normalized();
    auto plans = plan_levels(p);

    size_t pos = 0;
    auto need = [&](size_t n) {
        if (pos + n > state.size()) throw OramError("state blob truncated");
    };
    auto get32 = [&]() {
        need(4);
        uint32_t v = get_u32be(state.data() + pos);
        pos += 4;
        return v;
    };
    auto get64 = [&]() {
        need(8);
        uint64_t v = get_u64be(state.data() + pos);
        pos += 8;
        return v;
    };

    if (get32() != 1) throw OramError("unsupported state blob version");
    if (get32() != plans.size()) throw OramError("state blob level count mismatch");

    Oram o;
    o.params_ = p;
    need(32);
    std::copy(state.begin() + pos, state.begin() + pos + 32, o.leaf_prf_key_.begin());
    pos += 32;
    uint32_t rng_len = get32();
    need(rng_len);
    std::string rng_state(state.begin() + pos, state.begin() + pos + rng_len);
    pos += rng_len;
    std::istringstream rst(rng_state);
    rst >> o.rng_;
    if (!rst) throw OramError("state blob rng state unreadable");

    for (size_t i = 0; i < plans.size(); ++i) {
        const auto& pl = plans[i];
        uint64_t evict_count = get64();
        Hash256 root;
        need(32);
        std::copy(state.begin() + pos, state.begin() + pos + 32, root.begin());
        pos += 32;
        uint32_t nblocks = get32();
        std::vector<OramBlock> blocks(nblocks);
        for (auto& b : blocks) {
            b.bid = get32();
            b.leaf = get32();
            need(pl.payload_bytes);
            b.payload.assign(state.begin() + pos, state.begin() + pos + pl.payload_bytes);
            pos += pl.payload_bytes;
        }
        auto tf = tree_file(dir, base, i);
        OramTree tree = OramTree::load(tf, tf.string() + ".mht", pl.capacity, p.bucket_z,
                                       pl.payload_bytes, level_key(master_key, i), &root);
        uint32_t max_stash =
            i == 0 ? p.max_stash : 2 * OramParams::height_for(pl.capacity) * p.bucket_z;
        Stash stash(max_stash, pl.payload_bytes);
        stash.restore(blocks);
        o.levels_.push_back(Level{pl, std::move(tree), std::move(stash), evict_count});
    }
    uint32_t top_count = get32();
    if (top_count != plans.back().logical_count) throw OramError("state blob top map mismatch");
    o.top_map_.resize(top_count);
    for (auto& v : o.top_map_) v = get32();
    if (pos != state.size()) throw OramError("state blob has trailing bytes");
    return o;
}

}  // namespace t3::oram
