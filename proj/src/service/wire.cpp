#include "t3/service/wire.hpp"

#include <cstring>
#include <stdexcept>

namespace t3::service {

const char* errcode_name(ErrCode code) {
    switch (code) {
        case ErrCode::BadEncoding: return "bad-encoding";
        case ErrCode::BadProof: return "bad-proof";
        case ErrCode::Unavailable: return "unavailable";
        case ErrCode::ReplayDetected: return "replay-detected";
        case ErrCode::AuthFail: return "auth-fail";
        case ErrCode::QuoteInvalid: return "quote-invalid";
        case ErrCode::DuplicateRead: return "duplicate-read";
        case ErrCode::Internal: return "internal";
    }
    return "unknown";
}

Bytes encode_envelope(uint8_t type, ByteSpan body) {
    if (body.size() > kMaxEnvelopeBody) throw std::length_error("envelope body too large");
    Bytes out(5 + body.size());
    out[0] = type;
    put_u32be(out.data() + 1, static_cast<uint32_t>(body.size()));
    std::memcpy(out.data() + 5, body.data(), body.size());
    return out;
}

std::optional<Envelope> try_decode_envelope(Bytes& buffer) {
    if (buffer.size() < 5) return std::nullopt;
    uint32_t len = get_u32be(buffer.data() + 1);
    if (len > kMaxEnvelopeBody) throw std::runtime_error("envelope body too large");
    if (buffer.size() < 5u + len) return std::nullopt;
    Envelope env;
    env.type = buffer[0];
    env.body.assign(buffer.begin() + 5, buffer.begin() + 5 + len);
    buffer.erase(buffer.begin(), buffer.begin() + 5 + len);
    return env;
}

Bytes encode_query(const QueryBody& q) {
    Bytes out;
    out.push_back(q.delta);
    Bytes proof = q.proof.serialize();
    out.insert(out.end(), proof.begin(), proof.end());
    return out;
}

QueryBody parse_query(ByteSpan raw) {
    if (raw.size() < 1) throw std::runtime_error("empty query");
    QueryBody q;
    q.delta = raw[0];
    q.proof = enclave::OwnershipProof::parse(ByteSpan(raw.data() + 1, raw.size() - 1));
    return q;
}

Bytes encode_query_resp(const QueryRespBody& r) {
    Bytes out(8 + r.records.size() * utxo::kRecordSize);
    put_u64be(out.data(), r.interval);
    for (size_t i = 0; i < r.records.size(); ++i)
        r.records[i].serialize_into(out.data() + 8 + i * utxo::kRecordSize);
    return out;
}

QueryRespBody parse_query_resp(ByteSpan raw) {
    if (raw.size() < 8 || (raw.size() - 8) % utxo::kRecordSize != 0)
        throw std::runtime_error("malformed query response");
    QueryRespBody r;
    r.interval = get_u64be(raw.data());
    size_t count = (raw.size() - 8) / utxo::kRecordSize;
    r.records.reserve(count);
    for (size_t i = 0; i < count; ++i)
        r.records.push_back(
            utxo::UtxoRecord::parse(raw.data() + 8 + i * utxo::kRecordSize));
    return r;
}

Bytes encode_error(ErrCode code) {
    Bytes out(16, 0);
    out[0] = static_cast<uint8_t>(code);
    return out;
}

ErrCode parse_error(ByteSpan raw) {
    if (raw.size() != 16) throw std::runtime_error("malformed error body");
    return static_cast<ErrCode>(raw[0]);
}

}  // namespace t3::service
