#include "t3/harness/oracle.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cstring>

namespace t3::harness {

Bytes OracleKv::read(uint32_t bid) const {
    auto it = blocks_.find(bid);
    if (it == blocks_.end()) return Bytes(payload_, 0);
    return it->second;
}

void OracleKv::write(uint32_t bid, const Bytes& payload) {
    Bytes p = payload;
    p.resize(payload_, 0);
    blocks_[bid] = std::move(p);
}

void OracleUtxo::apply(const chain::UpdateBatch& batch) {
    for (const auto& s : batch.spends) {
        auto it = live_.find(s.pkh);
        if (it == live_.end()) continue;
        auto& recs = it->second;
        recs.erase(std::remove_if(recs.begin(), recs.end(),
                                  [&](const utxo::UtxoRecord& r) {
                                      return r.txid == s.txid && r.vout == s.vout;
                                  }),
                   recs.end());
    }
    for (const auto& r : batch.creates) live_[r.pkh].push_back(r);
}

std::vector<utxo::UtxoRecord> OracleUtxo::query(const Hash160& pkh) const {
    auto it = live_.find(pkh);
    if (it == live_.end()) return {};
    auto recs = it->second;
    std::sort(recs.begin(), recs.end(), [](const utxo::UtxoRecord& a, const utxo::UtxoRecord& b) {
        if (a.txid != b.txid) return a.txid < b.txid;
        return a.vout < b.vout;
    });
    return recs;
}

size_t OracleUtxo::total_records() const {
    size_t n = 0;
    for (const auto& [pkh, recs] : live_) n += recs.size();
    return n;
}

namespace {

Hash256 raw_sha256(const uint8_t* data, size_t len) {
    Hash256 out;
    SHA256(data, len, out.data());
    return out;
}

}  // namespace

Hash256 ref_hmac_sha256(ByteSpan key, ByteSpan msg) {
    uint8_t k[64] = {0};
    if (key.size() > 64) {
        Hash256 kh = raw_sha256(key.data(), key.size());
        std::memcpy(k, kh.data(), 32);
    } else {
        std::memcpy(k, key.data(), key.size());
    }
    Bytes inner(64 + msg.size());
    for (size_t i = 0; i < 64; ++i) inner[i] = k[i] ^ 0x36;
    std::memcpy(inner.data() + 64, msg.data(), msg.size());
    Hash256 ih = raw_sha256(inner.data(), inner.size());
    uint8_t outer[96];
    for (size_t i = 0; i < 64; ++i) outer[i] = k[i] ^ 0x5c;
    std::memcpy(outer + 64, ih.data(), 32);
    return raw_sha256(outer, 96);
}

Hash256 ref_merkle_root(const std::vector<Hash256>& txids) {
    if (txids.size() == 1) return txids[0];
    std::vector<Hash256> up;
    for (size_t i = 0; i < txids.size(); i += 2) {
        const Hash256& a = txids[i];
        const Hash256& b = (i + 1 < txids.size()) ? txids[i + 1] : txids[i];
        uint8_t buf[64];
        std::memcpy(buf, a.data(), 32);
        std::memcpy(buf + 32, b.data(), 32);
        Hash256 once = raw_sha256(buf, 64);
        up.push_back(raw_sha256(once.data(), 32));
    }
    return ref_merkle_root(up);
}

}  // namespace t3::harness
