#pragma once

#include "t3/chain/header.hpp"
#include "t3/utxo/record.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace t3::chain {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TxIn {
    Hash256 prev_txid{};
    uint32_t prev_vout = 0;
    Bytes script_sig;
    uint32_t sequence = 0xFFFFFFFF;

    bool is_coinbase() const;
};

struct TxOut {
    uint64_t value = 0;
    Bytes script_pubkey;
};

// Witness data, when present, is parsed past but not retained; txid is
// always the double-SHA256 of the stripped (pre-SegWit) serialization.
struct Transaction {
    int32_t version = 1;
    std::vector<TxIn> vin;
    std::vector<TxOut> vout;
    uint32_t locktime = 0;
    bool has_witness = false;
    Hash256 txid{};
};

struct Block {
    BlockHeader header;
    std::vector<Transaction> txs;
};

// Bitcoin CompactSize integer.
uint64_t read_varint(ByteSpan data, size_t& pos);
void write_varint(Bytes& out, uint64_t v);

Transaction parse_transaction(ByteSpan data, size_t& pos);
Block parse_block(ByteSpan raw);

// Legacy (non-witness) wire form; recomputes nothing, callers that
// build transactions by hand must set txid via finalize_txid.
Bytes serialize_transaction(const Transaction& tx);
Bytes serialize_block(const Block& b);
void finalize_txid(Transaction& tx);

enum class ScriptClass { P2pkh, P2sh, NullData, Other };

ScriptClass classify_script(ByteSpan script);

// 20-byte hash embedded in a P2PKH or P2SH output script.
std::optional<Hash160> script_pkh(ByteSpan script);

// Last data push of a script (the pubkey of a P2PKH spend, the redeem
// script of a P2SH spend). nullopt when the script pushes nothing.
std::optional<Bytes> last_push(ByteSpan script);

bool verify_block_body(const Block& b);

// Display order for txids follows Bitcoin convention: bytes reversed.
std::string txid_hex(const Hash256& txid);
Hash256 txid_from_hex(const std::string& hex);

struct SpendRef {
    Hash160 pkh{};
    Hash256 txid{};
    uint32_t vout = 0;
};

struct UpdateBatch {
    uint32_t height = 0;
    std::vector<SpendRef> spends;
    std::vector<utxo::UtxoRecord> creates;
    uint32_t skipped_outputs = 0;  // non-P2PKH/P2SH outputs
    uint32_t skipped_inputs = 0;   // spends with no recoverable address hash
};

// Reduces a verified block to the ORAM update batch: every P2PKH/P2SH
// output becomes a create, every non-coinbase input a spend keyed by
// hash160 of the scriptSig's final push.
UpdateBatch prune(const Block& block, uint32_t height);

}  // namespace t3::chain
