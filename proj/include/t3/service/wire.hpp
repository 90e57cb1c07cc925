#pragma once

#include "t3/enclave/session.hpp"
#include "t3/utxo/record.hpp"

#include <optional>

namespace t3::service {

// Envelope: 1-byte type, 4-byte BE body length, body. QUERY and
// QUERY_RESP bodies are sealed frames; attestation bodies and
// pre-session errors travel in the clear.
enum MsgType : uint8_t {
    kAttestReq = 0x01,
    kAttestResp = 0x02,
    kQuery = 0x10,
    kQueryResp = 0x11,
    kError = 0x7F,
};

enum class ErrCode : uint8_t {
    BadEncoding = 1,
    BadProof = 2,
    Unavailable = 3,
    ReplayDetected = 4,
    AuthFail = 5,
    QuoteInvalid = 6,
    DuplicateRead = 7,
    Internal = 8,
};

const char* errcode_name(ErrCode code);

constexpr size_t kMaxEnvelopeBody = 1u << 20;

struct Envelope {
    uint8_t type = 0;
    Bytes body;
};

Bytes encode_envelope(uint8_t type, ByteSpan body);

// Consumes one complete envelope off the front of buffer, if present.
// Throws on oversized or unknown-length corruption; callers treat that
// as BadEncoding and keep the connection.
std::optional<Envelope> try_decode_envelope(Bytes& buffer);

struct QueryBody {
    uint8_t delta = 0;  // 0 = server default
    enclave::OwnershipProof proof;
};

Bytes encode_query(const QueryBody& q);
QueryBody parse_query(ByteSpan raw);

struct QueryRespBody {
    uint64_t interval = 0;
    std::vector<utxo::UtxoRecord> records;
};

Bytes encode_query_resp(const QueryRespBody& r);
QueryRespBody parse_query_resp(ByteSpan raw);

// Error bodies are a fixed 16 bytes so sealed error frames are
// indistinguishable in size regardless of cause.
Bytes encode_error(ErrCode code);
ErrCode parse_error(ByteSpan raw);

}  // namespace t3::service
