#include "t3/harness/genchain.hpp"

#include "t3/chain/chainfile.hpp"
#include "t3/chain/merkle.hpp"
#include "t3/chain/tx.hpp"
#include "t3/crypto.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>

namespace t3::harness {

namespace {

using chain::Block;
using chain::Transaction;
using utxo::UtxoRecord;

struct Wallet {
    Bytes pub;
    Bytes priv;
    Hash160 pkh{};
};

Bytes p2pkh_script(const Hash160& pkh) {
    Bytes s = {0x76, 0xa9, 0x14};
    s.insert(s.end(), pkh.begin(), pkh.end());
    s.push_back(0x88);
    s.push_back(0xac);
    return s;
}

Bytes spend_script(const Bytes& pubkey) {
    Bytes s;
    s.push_back(64);  // placeholder signature push; scripts are not executed
    s.insert(s.end(), 64, 0x00);
    s.push_back(static_cast<uint8_t>(pubkey.size()));
    s.insert(s.end(), pubkey.begin(), pubkey.end());
    return s;
}

// Largest-deficit target assignment keeps the realized histogram
// glued to the configured one instead of drifting with sampling noise.
class TargetPicker {
public:
    explicit TargetPicker(const std::vector<std::pair<uint32_t, double>>& hist) : hist_(hist) {
        double sum = 0;
        for (const auto& [count, p] : hist_) {
            if (count == 0 || p < 0) throw std::invalid_argument("infeasible distribution");
            sum += p;
        }
        if (hist_.empty() || sum <= 0) throw std::invalid_argument("infeasible distribution");
        for (auto& [count, p] : hist_) p /= sum;
        opened_.assign(hist_.size(), 0);
    }

    uint32_t next() {
        ++total_;
        size_t best = 0;
        double best_deficit = -1e300;
        for (size_t i = 0; i < hist_.size(); ++i) {
            double deficit = hist_[i].second * static_cast<double>(total_) -
                             static_cast<double>(opened_[i]);
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = i;
            }
        }
        ++opened_[best];
        return hist_[best].first;
    }

private:
    std::vector<std::pair<uint32_t, double>> hist_;
    std::vector<uint64_t> opened_;
    uint64_t total_ = 0;
};

struct Outpoint {
    Hash256 txid{};
    uint32_t vout = 0;
    uint64_t value = 0;
};

nlohmann::json record_json(const UtxoRecord& r) {
    return {{"txid", chain::txid_hex(r.txid)},
            {"vout", r.vout},
            {"amount", r.amount},
            {"height", r.height}};
}

}  // namespace

GenResult gen_chain(const GenParams& params, const std::filesystem::path& dir) {
    if (params.blocks < 1) throw std::invalid_argument("need at least one block");
    if (params.txs_per_block < 1 || params.outputs_per_tx < 1)
        throw std::invalid_argument("need at least one tx and output per block");

    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(params.seed);
    auto rand_u64 = [&rng](uint64_t bound) { return rng() % bound; };
    auto rand_prob = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };

    std::vector<Wallet> wallets;
    auto new_wallet = [&]() -> size_t {
        std::array<uint8_t, 32> seed32;
        for (size_t i = 0; i < 4; ++i) put_u64be(seed32.data() + 8 * i, rng());
        auto kp = crypto::ed25519_from_seed(seed32);
        Wallet w;
        w.pub = Bytes(kp.public_key.begin(), kp.public_key.end());
        w.priv = Bytes(seed32.begin(), seed32.end());
        w.pkh = crypto::hash160(w.pub);
        wallets.push_back(std::move(w));
        return wallets.size() - 1;
    };

    TargetPicker picker(params.histogram);
    GroundTruth live;
    std::vector<size_t> filled;  // wallet indices eligible for sweeping
    struct OpenHolder {
        size_t wallet;
        uint32_t target;
        uint32_t count;
    };
    std::optional<OpenHolder> open;

    GenResult result;
    result.blocks = params.blocks;
    const uint32_t k = params.txs_per_block;

    std::vector<Outpoint> faucet_prev;
    size_t faucet_prev_wallet = SIZE_MAX;
    Hash256 prev_hash{};

    for (uint32_t h = 0; h < params.blocks; ++h) {
        Block blk;
        std::vector<Hash256> txids;

        // Coinbase. Ordinary blocks mint next block's faucet outputs;
        // the final block splits its subsidy over fresh single-use
        // addresses so no oversized faucet survives the chain.
        Transaction cb;
        cb.vin.resize(1);
        cb.vin[0].prev_vout = 0xFFFFFFFF;
        cb.vin[0].script_sig = {0x04,
                                static_cast<uint8_t>(h),
                                static_cast<uint8_t>(h >> 8),
                                static_cast<uint8_t>(h >> 16),
                                static_cast<uint8_t>(h >> 24)};
        const uint64_t subsidy_each = 5000000000ull / k;
        std::vector<size_t> coinbase_wallets;
        if (h + 1 < params.blocks) {
            size_t fw = new_wallet();
            for (uint32_t i = 0; i < k; ++i) {
                cb.vout.push_back({subsidy_each, p2pkh_script(wallets[fw].pkh)});
                coinbase_wallets.push_back(fw);
            }
        } else {
            for (uint32_t i = 0; i < k; ++i) {
                size_t fw = new_wallet();
                cb.vout.push_back({subsidy_each, p2pkh_script(wallets[fw].pkh)});
                coinbase_wallets.push_back(fw);
            }
        }
        chain::finalize_txid(cb);
        for (uint32_t i = 0; i < k; ++i) {
            UtxoRecord rec;
            rec.txid = cb.txid;
            rec.vout = i;
            rec.amount = subsidy_each;
            rec.height = h;
            rec.pkh = wallets[coinbase_wallets[i]].pkh;
            live[rec.pkh].push_back(rec);
            ++result.outputs_created;
        }
        blk.txs.push_back(cb);
        txids.push_back(cb.txid);
        ++result.transactions;

        // Funded transactions: one faucet input each, an optional
        // sweep of a previously filled address, fresh wallet outputs.
        std::vector<size_t> eligible = filled;  // only prior-block fills
        std::vector<size_t> newly_filled;
        if (h > 0) {
            for (uint32_t t = 0; t < k; ++t) {
                Transaction tx;
                chain::TxIn fin;
                fin.prev_txid = faucet_prev[t].txid;
                fin.prev_vout = faucet_prev[t].vout;
                fin.script_sig = spend_script(wallets[faucet_prev_wallet].pub);
                tx.vin.push_back(std::move(fin));
                {
                    auto& frecs = live[wallets[faucet_prev_wallet].pkh];
                    frecs.erase(std::remove_if(frecs.begin(), frecs.end(),
                                               [&](const UtxoRecord& r) {
                                                   return r.txid == faucet_prev[t].txid &&
                                                          r.vout == faucet_prev[t].vout;
                                               }),
                                frecs.end());
                    ++result.spends;
                }

                if (!eligible.empty() && rand_prob() < params.empty_rate) {
                    size_t pick = rand_u64(eligible.size());
                    size_t widx = eligible[pick];
                    eligible.erase(eligible.begin() + static_cast<ptrdiff_t>(pick));
                    filled.erase(std::remove(filled.begin(), filled.end(), widx), filled.end());
                    auto& recs = live[wallets[widx].pkh];
                    for (const auto& r : recs) {
                        chain::TxIn in;
                        in.prev_txid = r.txid;
                        in.prev_vout = r.vout;
                        in.script_sig = spend_script(wallets[widx].pub);
                        tx.vin.push_back(std::move(in));
                        ++result.spends;
                    }
                    recs.clear();
                }

                std::vector<Hash160> out_pkhs;
                for (uint32_t o = 0; o < params.outputs_per_tx; ++o) {
                    if (!open) {
                        open = OpenHolder{new_wallet(), picker.next(), 0};
                    }
                    auto& holder = wallets[open->wallet];
                    uint64_t amount = 10000 + rand_u64(100000000);
                    tx.vout.push_back({amount, p2pkh_script(holder.pkh)});
                    out_pkhs.push_back(holder.pkh);
                    if (++open->count >= open->target) {
                        newly_filled.push_back(open->wallet);
                        open.reset();
                    }
                }
                chain::finalize_txid(tx);
                for (uint32_t o = 0; o < params.outputs_per_tx; ++o) {
                    UtxoRecord rec;
                    rec.txid = tx.txid;
                    rec.vout = o;
                    rec.amount = tx.vout[o].value;
                    rec.height = h;
                    rec.pkh = out_pkhs[o];
                    live[rec.pkh].push_back(rec);
                    ++result.outputs_created;
                }
                blk.txs.push_back(tx);
                txids.push_back(blk.txs.back().txid);
                ++result.transactions;
            }
        }
        filled.insert(filled.end(), newly_filled.begin(), newly_filled.end());

        if (h + 1 < params.blocks) {
            faucet_prev.clear();
            for (uint32_t i = 0; i < k; ++i)
                faucet_prev.push_back({cb.txid, i, subsidy_each});
            faucet_prev_wallet = coinbase_wallets[0];
        }

        blk.header.version = 2;
        blk.header.prev_hash = prev_hash;
        blk.header.merkle_root = chain::merkle_root(txids);
        blk.header.timestamp = params.genesis_time + h * 600;
        blk.header = chain::mine(blk.header, params.nbits, nullptr);
        prev_hash = blk.header.hash();

        Bytes raw = chain::serialize_block(blk);
        auto path = chain::DirBlockSource::block_path(dir, h);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        f.write(reinterpret_cast<const char*>(raw.data()),
                static_cast<std::streamsize>(raw.size()));
    }

    // wallets.txt doubles as the client keyfile.
    {
        std::ofstream wf(dir / "wallets.txt", std::ios::trunc);
        for (const auto& w : wallets) wf << to_hex(w.pub) << "," << to_hex(w.priv) << "\n";
    }

    result.addresses = wallets.size();
    for (const auto& [pkh, recs] : live) {
        result.live_records += recs.size();
        if (!recs.empty()) ++result.live_addresses;
    }
    result.coverage_at_2 = coverage_at(live, 2);

    {
        nlohmann::json gt;
        for (const auto& [pkh, recs] : live) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : recs) arr.push_back(record_json(r));
            gt[to_hex(ByteSpan(pkh.data(), pkh.size()))] = std::move(arr);
        }
        std::ofstream gf(dir / "ground_truth.json", std::ios::trunc);
        gf << nlohmann::json{{"addresses", std::move(gt)}}.dump(1) << "\n";
    }
    {
        nlohmann::json hist = nlohmann::json::array();
        for (const auto& [count, p] : params.histogram) hist.push_back({{"count", count}, {"p", p}});
        nlohmann::json manifest = {
            {"seed", params.seed},
            {"blocks", params.blocks},
            {"txs_per_block", params.txs_per_block},
            {"outputs_per_tx", params.outputs_per_tx},
            {"empty_rate", params.empty_rate},
            {"histogram", std::move(hist)},
            {"nbits", params.nbits},
            {"transactions", result.transactions},
            {"outputs_created", result.outputs_created},
            {"spends", result.spends},
            {"addresses", result.addresses},
            {"live_records", result.live_records},
            {"live_addresses", result.live_addresses},
            {"coverage_at_2", result.coverage_at_2},
        };
        std::ofstream mf(dir / "manifest.json", std::ios::trunc);
        mf << manifest.dump(1) << "\n";
    }
    return result;
}

GroundTruth load_ground_truth(const std::filesystem::path& file) {
    std::ifstream f(file);
    if (!f) throw std::runtime_error("cannot open " + file.string());
    nlohmann::json j;
    f >> j;
    GroundTruth out;
    for (const auto& [pkh_hex, arr] : j.at("addresses").items()) {
        Bytes raw = from_hex(pkh_hex);
        if (raw.size() != 20) throw std::runtime_error("bad pkh in ground truth");
        Hash160 pkh;
        std::copy(raw.begin(), raw.end(), pkh.begin());
        std::vector<UtxoRecord> recs;
        for (const auto& rj : arr) {
            UtxoRecord r;
            r.txid = chain::txid_from_hex(rj.at("txid").get<std::string>());
            r.vout = rj.at("vout").get<uint32_t>();
            r.amount = rj.at("amount").get<uint64_t>();
            r.height = rj.at("height").get<uint32_t>();
            r.pkh = pkh;
            recs.push_back(r);
        }
        out.emplace(pkh, std::move(recs));
    }
    return out;
}

double coverage_at(const GroundTruth& truth, uint32_t max_out) {
    uint64_t total = 0, covered = 0;
    for (const auto& [pkh, recs] : truth) {
        total += recs.size();
        covered += std::min<uint64_t>(recs.size(), max_out);
    }
    if (total == 0) return 1.0;
    return static_cast<double>(covered) / static_cast<double>(total);
}

}  // namespace t3::harness
