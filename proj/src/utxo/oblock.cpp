#include "t3/utxo/oblock.hpp"

#include "t3/crypto.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace t3::utxo {

namespace {

uint64_t prf64(const Key256& k_b, ByteSpan msg) {
    Hash256 h = crypto::hmac_sha256(ByteSpan(k_b.data(), k_b.size()), msg);
    return get_u64be(h.data());
}

bool slot_is_dummy(const uint8_t* slot) {
    // dummy <=> txid (first 32 bytes) all zero
    uint8_t acc = 0;
    for (size_t i = 0; i < 32; ++i) acc |= slot[i];
    return acc == 0;
}

void check_payload(ByteSpan payload) {
    if (payload.empty() || payload.size() % kRecordSize != 0)
        throw MalformedPayload("block payload is not a whole number of record slots");
}

}  // namespace

uint32_t oblock_map(const Hash160& pkh, const Key256& k_b, uint32_t n) {
    return static_cast<uint32_t>(prf64(k_b, ByteSpan(pkh.data(), pkh.size())) % n);
}

std::vector<uint32_t> oblock_map_multi(const Hash160& pkh, const Key256& k_b, uint32_t delta,
                                       uint32_t n, uint32_t delta_max) {
    if (delta < 1 || delta > delta_max) throw std::invalid_argument("delta out of range");
    std::vector<uint32_t> bids(delta);
    uint8_t msg[21];
    std::memcpy(msg, pkh.data(), 20);
    for (uint32_t i = 0; i < delta; ++i) {
        msg[20] = static_cast<uint8_t>(i);
        bids[i] = static_cast<uint32_t>(prf64(k_b, ByteSpan(msg, sizeof(msg))) % n);
    }
    return bids;
}

uint32_t oblock_route(const Hash160& pkh, const Hash256& txid, uint32_t vout, const Key256& k_b,
                      uint32_t delta) {
    uint8_t msg[56];
    std::memcpy(msg, pkh.data(), 20);
    std::memcpy(msg + 20, txid.data(), 32);
    put_u32be(msg + 52, vout);
    return static_cast<uint32_t>(prf64(k_b, ByteSpan(msg, sizeof(msg))) % delta);
}

uint32_t capacity_for(uint64_t m, uint64_t n) {
    if (m == 0 || n == 0) throw std::invalid_argument("capacity_for needs m, n >= 1");
    long double bound = std::numbers::e_v<long double> * static_cast<long double>(m) /
                        static_cast<long double>(n);
    return static_cast<uint32_t>(std::ceil(bound));
}

size_t payload_size(uint32_t capacity) { return size_t(capacity) * kRecordSize; }

std::vector<UtxoRecord> unpack(ByteSpan payload) {
    check_payload(payload);
    size_t slots = payload.size() / kRecordSize;
    std::vector<UtxoRecord> out;
    out.reserve(slots);
    for (size_t i = 0; i < slots; ++i) out.push_back(UtxoRecord::parse(payload.data() + i * kRecordSize));
    return out;
}

void pack(const std::vector<UtxoRecord>& records, uint32_t capacity, Bytes& payload_out) {
    if (records.size() > capacity) throw BlockFull("more records than block capacity");
    payload_out.assign(payload_size(capacity), 0);
    for (size_t i = 0; i < records.size(); ++i)
        records[i].serialize_into(payload_out.data() + i * kRecordSize);
}

uint32_t occupied(ByteSpan payload) {
    check_payload(payload);
    uint32_t n = 0;
    for (size_t i = 0; i < payload.size(); i += kRecordSize)
        if (!slot_is_dummy(payload.data() + i)) ++n;
    return n;
}

bool try_insert(Bytes& payload, const UtxoRecord& record) {
    check_payload(payload);
    size_t found = payload.size();
    for (size_t i = 0; i < payload.size(); i += kRecordSize)
        if (slot_is_dummy(payload.data() + i) && found == payload.size()) found = i;
    if (found == payload.size()) return false;
    record.serialize_into(payload.data() + found);
    return true;
}

void insert(Bytes& payload, const UtxoRecord& record) {
    if (!try_insert(payload, record)) throw BlockFull("no free slot in block");
}

bool remove(Bytes& payload, const Hash256& txid, uint32_t vout) {
    check_payload(payload);
    bool removed = false;
    for (size_t i = 0; i < payload.size(); i += kRecordSize) {
        uint8_t* slot = payload.data() + i;
        bool match = !slot_is_dummy(slot) && std::memcmp(slot, txid.data(), 32) == 0 &&
                     get_u32be(slot + 32) == vout;
        if (match) {
            std::memset(slot, 0, kRecordSize);
            removed = true;
        }
    }
    return removed;
}

std::vector<UtxoRecord> extract(ByteSpan payload, const Hash160& pkh, uint32_t max_out) {
    check_payload(payload);
    std::vector<UtxoRecord> out(max_out); // dummy-padded, constant length
    size_t taken = 0;
    for (size_t i = 0; i < payload.size(); i += kRecordSize) {
        const uint8_t* slot = payload.data() + i;
        bool match = !slot_is_dummy(slot) && std::memcmp(slot + 48, pkh.data(), 20) == 0;
        if (match && taken < max_out) out[taken++] = UtxoRecord::parse(slot);
    }
    return out;
}

}  // namespace t3::utxo
