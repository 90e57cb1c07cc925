#pragma once

#include "t3/bytes.hpp"
#include "t3/chain/tx.hpp"
#include "t3/utxo/record.hpp"

#include <map>
#include <vector>

namespace t3::harness {

// Plaintext key-value reference for ORAM equivalence tests. Absent
// blocks read as zeros, mirroring an untouched ORAM block.
class OracleKv {
public:
    explicit OracleKv(size_t payload_bytes) : payload_(payload_bytes) {}

    Bytes read(uint32_t bid) const;
    void write(uint32_t bid, const Bytes& payload);
    size_t size() const { return blocks_.size(); }

private:
    size_t payload_;
    std::map<uint32_t, Bytes> blocks_;
};

// Plaintext UTXO set reference for end-to-end tests. Applies batches
// with the same spend/create ordering as the store.
class OracleUtxo {
public:
    void apply(const chain::UpdateBatch& batch);
    std::vector<utxo::UtxoRecord> query(const Hash160& pkh) const;
    const std::map<Hash160, std::vector<utxo::UtxoRecord>>& all() const { return live_; }
    size_t total_records() const;

private:
    std::map<Hash160, std::vector<utxo::UtxoRecord>> live_;
};

// Independent reference implementations used as oracles for the
// production crypto paths. Both call the raw SHA-256 primitive
// directly and share no code with the wrappers under test.
Hash256 ref_hmac_sha256(ByteSpan key, ByteSpan msg);
Hash256 ref_merkle_root(const std::vector<Hash256>& txids);

}  // namespace t3::harness
