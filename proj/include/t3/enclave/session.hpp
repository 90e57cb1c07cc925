#pragma once

#include "t3/bytes.hpp"
#include "t3/crypto.hpp"

#include <stdexcept>

namespace t3::enclave {

// SIMULATION: this module stands in for a hardware TEE. The attestation
// "quote" is an HMAC under a locally configured root key, not an Intel-signed
// statement, and offers no protection against an attacker who knows that key.

struct EnclaveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct QuoteInvalid : EnclaveError {
    using EnclaveError::EnclaveError;
};
struct StaleNonce : EnclaveError {
    using EnclaveError::EnclaveError;
};
struct AuthFail : EnclaveError {
    using EnclaveError::EnclaveError;
};
struct ReplayDetected : EnclaveError {
    using EnclaveError::EnclaveError;
};

enum class Role : uint8_t { Client = 1, Server = 2 };

// Sealed-channel endpoint state. Counters only ever increase, and the nonce
// construction folds in the sender's role, so a (key, nonce) pair can never
// repeat across the two directions.
struct Session {
    uint64_t session_id = 0;
    Key256 shared_key{};
    uint64_t send_counter = 0;
    uint64_t recv_counter = 0;
    Role role = Role::Client;
    std::array<uint8_t, 32> session_nonce{}; // the attestation nonce, for proof binding
};

struct ClientHello {
    std::array<uint8_t, 32> nonce;
    std::array<uint8_t, 32> dh_public;

    Bytes serialize() const;
    static ClientHello parse(ByteSpan raw);
};

struct AttestationQuote {
    Hash256 measurement;                  // digest of the server build identity
    std::array<uint8_t, 32> dh_public;    // server's ephemeral key-exchange value
    std::array<uint8_t, 32> client_nonce; // echoed from the hello
    Hash256 mac;                          // HMAC(root, measurement || dh_public || nonce)

    Bytes serialize() const;
    static AttestationQuote parse(ByteSpan raw);
};

Hash256 enclave_measurement();

ClientHello make_client_hello(crypto::X25519KeyPair& ephemeral_out);

// Server half of attestation: answers a hello with a quote and derives the
// session. Stateless across calls; safe to run concurrently.
AttestationQuote attest_server(const Key256& attest_root, const ClientHello& hello,
                               Session& session_out);

// Client half: checks the quote against the nonce it sent, then derives the
// same session key. Throws StaleNonce / QuoteInvalid.
Session attest_client(const Key256& attest_root, const ClientHello& sent,
                      const crypto::X25519KeyPair& ephemeral, const AttestationQuote& quote);

// Frame: 4-byte BE length (of everything after it) || 8-byte BE counter ||
// ciphertext || 16-byte tag.
Bytes seal(Session& session, ByteSpan plaintext);

// Rejects out-of-order and replayed counters (ReplayDetected) and any
// authentication failure or truncation (AuthFail).
Bytes unseal(Session& session, ByteSpan frame);

struct OwnershipProof {
    Hash160 pkh{};
    Bytes pubkey;
    Bytes signature; // empty in preimage mode

    Bytes serialize() const;
    static OwnershipProof parse(ByteSpan raw);
};

// Preimage mode: hash160(pubkey) must equal pkh. Signature mode additionally
// demands a signature over (pkh || session nonce) by that pubkey (Ed25519).
bool verify_ownership(const OwnershipProof& proof, const Hash160& pkh, const Session& session,
                      bool require_signature);

Bytes ownership_message(const Hash160& pkh, const Session& session);

}  // namespace t3::enclave
