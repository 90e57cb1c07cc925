#pragma once

#include "t3/utxo/record.hpp"

namespace t3::utxo {

// Address -> block id mappings under a secret PRF key, plus the fixed-layout
// record packing inside one ORAM block payload. A block payload is exactly
// capacity * 68 bytes; unoccupied slots are all-zero (dummy) records, so every
// payload serializes to the same length regardless of occupancy.

// bid = first 8 bytes (big-endian) of HMAC-SHA256(k_b, pkh), mod n.
uint32_t oblock_map(const Hash160& pkh, const Key256& k_b, uint32_t n);

// bids[i] = HMAC(k_b, pkh || byte(i)) mod n, for i in [0, delta).
std::vector<uint32_t> oblock_map_multi(const Hash160& pkh, const Key256& k_b, uint32_t delta,
                                       uint32_t n, uint32_t delta_max);

// Which of an address's delta blocks receives a given output:
// HMAC(k_b, pkh || txid || vout) mod delta.
uint32_t oblock_route(const Hash160& pkh, const Hash256& txid, uint32_t vout, const Key256& k_b,
                      uint32_t delta);

// Records per block sized from the max-load bound: ceil(e * m / n) holds the
// maximum bin load with probability 1 - 1/n when m items hash into n bins.
uint32_t capacity_for(uint64_t m, uint64_t n);

size_t payload_size(uint32_t capacity);

// All block operations scan every slot of the payload exactly once.
std::vector<UtxoRecord> unpack(ByteSpan payload);
void pack(const std::vector<UtxoRecord>& records, uint32_t capacity, Bytes& payload_out);
uint32_t occupied(ByteSpan payload);

// Places the record in a free slot; throws BlockFull when none remains.
void insert(Bytes& payload, const UtxoRecord& record);
bool try_insert(Bytes& payload, const UtxoRecord& record);

// Clears the slot matching (txid, vout); returns whether one was found.
bool remove(Bytes& payload, const Hash256& txid, uint32_t vout);

// Up to max_out records whose pkh matches, dummy-padded to exactly max_out.
std::vector<UtxoRecord> extract(ByteSpan payload, const Hash160& pkh, uint32_t max_out);

}  // namespace t3::utxo
