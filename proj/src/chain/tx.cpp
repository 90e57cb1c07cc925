#include "t3/chain/tx.hpp"

#include "t3/chain/merkle.hpp"
#include "t3/crypto.hpp"

#include <algorithm>
#include <cstring>

namespace t3::chain {

namespace {

void need(ByteSpan data, size_t pos, size_t n) {
    if (pos > data.size() || data.size() - pos < n) throw ParseError("truncated encoding");
}

Bytes read_bytes(ByteSpan data, size_t& pos, size_t n) {
    need(data, pos, n);
    Bytes out(data.begin() + static_cast<ptrdiff_t>(pos), data.begin() + static_cast<ptrdiff_t>(pos + n));
    pos += n;
    return out;
}

uint32_t read_u32le(ByteSpan data, size_t& pos) {
    need(data, pos, 4);
    uint32_t v = get_u32le(data.data() + pos);
    pos += 4;
    return v;
}

uint64_t read_u64le(ByteSpan data, size_t& pos) {
    need(data, pos, 8);
    uint64_t v = get_u64le(data.data() + pos);
    pos += 8;
    return v;
}

constexpr size_t kMaxListLen = 1 << 20;  // sanity bound against hostile counts

void serialize_core(Bytes& out, const Transaction& tx) {
    out.resize(out.size() + 4);
    put_u32le(out.data() + out.size() - 4, static_cast<uint32_t>(tx.version));
    write_varint(out, tx.vin.size());
    for (const auto& in : tx.vin) {
        out.insert(out.end(), in.prev_txid.begin(), in.prev_txid.end());
        out.resize(out.size() + 4);
        put_u32le(out.data() + out.size() - 4, in.prev_vout);
        write_varint(out, in.script_sig.size());
        out.insert(out.end(), in.script_sig.begin(), in.script_sig.end());
        out.resize(out.size() + 4);
        put_u32le(out.data() + out.size() - 4, in.sequence);
    }
    write_varint(out, tx.vout.size());
    for (const auto& o : tx.vout) {
        out.resize(out.size() + 8);
        put_u64le(out.data() + out.size() - 8, o.value);
        write_varint(out, o.script_pubkey.size());
        out.insert(out.end(), o.script_pubkey.begin(), o.script_pubkey.end());
    }
    out.resize(out.size() + 4);
    put_u32le(out.data() + out.size() - 4, tx.locktime);
}

}  // namespace

bool TxIn::is_coinbase() const {
    return prev_vout == 0xFFFFFFFF &&
           std::all_of(prev_txid.begin(), prev_txid.end(), [](uint8_t b) { return b == 0; });
}

uint64_t read_varint(ByteSpan data, size_t& pos) {
    need(data, pos, 1);
    uint8_t first = data[pos++];
    if (first < 0xfd) return first;
    if (first == 0xfd) {
        need(data, pos, 2);
        uint64_t v = data[pos] | (static_cast<uint64_t>(data[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    if (first == 0xfe) return read_u32le(data, pos);
    return read_u64le(data, pos);
}

void write_varint(Bytes& out, uint64_t v) {
    if (v < 0xfd) {
        out.push_back(static_cast<uint8_t>(v));
    } else if (v <= 0xffff) {
        out.push_back(0xfd);
        out.push_back(static_cast<uint8_t>(v));
        out.push_back(static_cast<uint8_t>(v >> 8));
    } else if (v <= 0xffffffffull) {
        out.push_back(0xfe);
        out.resize(out.size() + 4);
        put_u32le(out.data() + out.size() - 4, static_cast<uint32_t>(v));
    } else {
        out.push_back(0xff);
        out.resize(out.size() + 8);
        put_u64le(out.data() + out.size() - 8, v);
    }
}

Transaction parse_transaction(ByteSpan data, size_t& pos) {
    Transaction tx;
    tx.version = static_cast<int32_t>(read_u32le(data, pos));

    // SegWit marker: zero input count followed by flag byte.
    size_t probe = pos;
    uint64_t nin = read_varint(data, probe);
    size_t body_start;  // where varint(vin count) begins, for the stripped txid
    if (nin == 0) {
        need(data, probe, 1);
        uint8_t flag = data[probe];
        if (flag == 0) throw ParseError("zero-input transaction");
        tx.has_witness = true;
        pos = probe + 1;
        body_start = pos;
        nin = read_varint(data, pos);
    } else {
        body_start = pos;
        pos = probe;
    }
    if (nin == 0 || nin > kMaxListLen) throw ParseError("bad input count");
    tx.vin.reserve(nin);
    for (uint64_t i = 0; i < nin; ++i) {
        TxIn in;
        Bytes prev = read_bytes(data, pos, 32);
        std::memcpy(in.prev_txid.data(), prev.data(), 32);
        in.prev_vout = read_u32le(data, pos);
        uint64_t slen = read_varint(data, pos);
        if (slen > kMaxListLen) throw ParseError("oversized scriptSig");
        in.script_sig = read_bytes(data, pos, slen);
        in.sequence = read_u32le(data, pos);
        tx.vin.push_back(std::move(in));
    }

    uint64_t nout = read_varint(data, pos);
    if (nout == 0 || nout > kMaxListLen) throw ParseError("bad output count");
    tx.vout.reserve(nout);
    for (uint64_t i = 0; i < nout; ++i) {
        TxOut out;
        out.value = read_u64le(data, pos);
        uint64_t slen = read_varint(data, pos);
        if (slen > kMaxListLen) throw ParseError("oversized scriptPubKey");
        out.script_pubkey = read_bytes(data, pos, slen);
        tx.vout.push_back(std::move(out));
    }
    size_t body_end = pos;

    if (tx.has_witness) {
        for (uint64_t i = 0; i < nin; ++i) {
            uint64_t items = read_varint(data, pos);
            if (items > kMaxListLen) throw ParseError("bad witness count");
            for (uint64_t j = 0; j < items; ++j) {
                uint64_t wlen = read_varint(data, pos);
                if (wlen > kMaxListLen) throw ParseError("oversized witness item");
                need(data, pos, wlen);
                pos += wlen;  // skipped, not retained
            }
        }
    }

    tx.locktime = read_u32le(data, pos);

    // txid over the stripped form: version ‖ vin ‖ vout ‖ locktime.
    Bytes stripped;
    stripped.reserve(4 + (body_end - body_start) + 4);
    stripped.resize(4);
    put_u32le(stripped.data(), static_cast<uint32_t>(tx.version));
    stripped.insert(stripped.end(), data.begin() + static_cast<ptrdiff_t>(body_start),
                    data.begin() + static_cast<ptrdiff_t>(body_end));
    stripped.resize(stripped.size() + 4);
    put_u32le(stripped.data() + stripped.size() - 4, tx.locktime);
    tx.txid = crypto::dsha256(stripped);
    return tx;
}

Block parse_block(ByteSpan raw) {
    if (raw.size() < kHeaderSize) throw ParseError("block shorter than header");
    Block b;
    b.header = BlockHeader::parse(ByteSpan(raw.data(), kHeaderSize));
    size_t pos = kHeaderSize;
    uint64_t ntx = read_varint(raw, pos);
    if (ntx == 0 || ntx > kMaxListLen) throw ParseError("bad transaction count");
    b.txs.reserve(ntx);
    for (uint64_t i = 0; i < ntx; ++i) b.txs.push_back(parse_transaction(raw, pos));
    if (pos != raw.size()) throw ParseError("trailing bytes after block");
    return b;
}

Bytes serialize_transaction(const Transaction& tx) {
    Bytes out;
    serialize_core(out, tx);
    return out;
}

Bytes serialize_block(const Block& b) {
    Bytes out;
    auto hdr = b.header.serialize();
    out.insert(out.end(), hdr.begin(), hdr.end());
    write_varint(out, b.txs.size());
    for (const auto& tx : b.txs) serialize_core(out, tx);
    return out;
}

void finalize_txid(Transaction& tx) {
    tx.txid = crypto::dsha256(serialize_transaction(tx));
}

ScriptClass classify_script(ByteSpan script) {
    if (script.size() == 25 && script[0] == 0x76 && script[1] == 0xa9 && script[2] == 0x14 &&
        script[23] == 0x88 && script[24] == 0xac)
        return ScriptClass::P2pkh;
    if (script.size() == 23 && script[0] == 0xa9 && script[1] == 0x14 && script[22] == 0x87)
        return ScriptClass::P2sh;
    if (!script.empty() && script[0] == 0x6a) return ScriptClass::NullData;
    return ScriptClass::Other;
}

std::optional<Hash160> script_pkh(ByteSpan script) {
    Hash160 h;
    switch (classify_script(script)) {
        case ScriptClass::P2pkh:
            std::memcpy(h.data(), script.data() + 3, 20);
            return h;
        case ScriptClass::P2sh:
            std::memcpy(h.data(), script.data() + 2, 20);
            return h;
        default:
            return std::nullopt;
    }
}

std::optional<Bytes> last_push(ByteSpan script) {
    std::optional<Bytes> last;
    size_t pos = 0;
    while (pos < script.size()) {
        uint8_t op = script[pos++];
        size_t len = 0;
        if (op >= 0x01 && op <= 0x4b) {
            len = op;
        } else if (op == 0x4c) {  // OP_PUSHDATA1
            if (pos >= script.size()) return last;
            len = script[pos++];
        } else if (op == 0x4d) {  // OP_PUSHDATA2
            if (pos + 2 > script.size()) return last;
            len = script[pos] | (static_cast<size_t>(script[pos + 1]) << 8);
            pos += 2;
        } else if (op == 0x4e) {  // OP_PUSHDATA4
            if (pos + 4 > script.size()) return last;
            len = get_u32le(script.data() + pos);
            pos += 4;
        } else {
            continue;  // non-push opcode, no operand
        }
        if (pos + len > script.size()) return last;
        last = Bytes(script.begin() + static_cast<ptrdiff_t>(pos),
                     script.begin() + static_cast<ptrdiff_t>(pos + len));
        pos += len;
    }
    return last;
}

bool verify_block_body(const Block& b) {
    if (b.txs.empty()) return false;
    std::vector<Hash256> txids;
    txids.reserve(b.txs.size());
    for (const auto& tx : b.txs) txids.push_back(tx.txid);
    return merkle_root(txids) == b.header.merkle_root;
}

std::string txid_hex(const Hash256& txid) {
    Hash256 rev;
    std::reverse_copy(txid.begin(), txid.end(), rev.begin());
    return to_hex(ByteSpan(rev.data(), rev.size()));
}

Hash256 txid_from_hex(const std::string& hex) {
    Bytes raw = from_hex(hex);
    if (raw.size() != 32) throw ParseError("txid hex must be 32 bytes");
    Hash256 h;
    std::reverse_copy(raw.begin(), raw.end(), h.begin());
    return h;
}

UpdateBatch prune(const Block& block, uint32_t height) {
    UpdateBatch batch;
    batch.height = height;
    for (const auto& tx : block.txs) {
        for (const auto& in : tx.vin) {
            if (in.is_coinbase()) continue;
            auto push = last_push(in.script_sig);
            if (!push || push->empty()) {
                ++batch.skipped_inputs;
                continue;
            }
            SpendRef s;
            s.pkh = crypto::hash160(*push);
            s.txid = in.prev_txid;
            s.vout = in.prev_vout;
            batch.spends.push_back(s);
        }
        for (uint32_t i = 0; i < tx.vout.size(); ++i) {
            auto pkh = script_pkh(tx.vout[i].script_pubkey);
            if (!pkh) {
                ++batch.skipped_outputs;
                continue;
            }
            utxo::UtxoRecord rec;
            rec.txid = tx.txid;
            rec.vout = i;
            rec.amount = tx.vout[i].value;
            rec.height = height;
            rec.pkh = *pkh;
            batch.creates.push_back(rec);
        }
    }
    return batch;
}

}  // namespace t3::chain
