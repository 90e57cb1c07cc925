#include "t3/enclave/session.hpp"

#include <cstring>

namespace t3::enclave {

namespace {

constexpr size_t kHelloSize = 64;
constexpr size_t kQuoteSize = 128;
constexpr size_t kFrameOverhead = 4 + 8 + 16;

Bytes quote_message(const AttestationQuote& q) {
    Bytes m;
    m.reserve(96);
    m.insert(m.end(), q.measurement.begin(), q.measurement.end());
    m.insert(m.end(), q.dh_public.begin(), q.dh_public.end());
    m.insert(m.end(), q.client_nonce.begin(), q.client_nonce.end());
    return m;
}

Session derive_session(Role role, const std::array<uint8_t, 32>& dh_shared,
                       const ClientHello& hello, const std::array<uint8_t, 32>& server_pub) {
    Bytes info;
    static constexpr char kLabel[] = "t3-session-v1";
    info.insert(info.end(), kLabel, kLabel + sizeof(kLabel) - 1);
    info.insert(info.end(), hello.dh_public.begin(), hello.dh_public.end());
    info.insert(info.end(), server_pub.begin(), server_pub.end());
    info.insert(info.end(), hello.nonce.begin(), hello.nonce.end());

    Session s;
    s.role = role;
    s.shared_key = crypto::hmac_sha256(ByteSpan(dh_shared.data(), dh_shared.size()), info);
    static constexpr char kSid[] = "session-id";
    Hash256 sid = crypto::hmac_sha256(
        ByteSpan(s.shared_key.data(), s.shared_key.size()),
        ByteSpan(reinterpret_cast<const uint8_t*>(kSid), sizeof(kSid) - 1));
    s.session_id = get_u64be(sid.data());
    s.session_nonce = hello.nonce;
    return s;
}

std::array<uint8_t, 12> frame_nonce(Role sender, uint64_t counter) {
    std::array<uint8_t, 12> n{};
    n[0] = static_cast<uint8_t>(sender);
    put_u64be(n.data() + 4, counter);
    return n;
}

}  // namespace

Bytes ClientHello::serialize() const {
    Bytes out(kHelloSize);
    std::memcpy(out.data(), nonce.data(), 32);
    std::memcpy(out.data() + 32, dh_public.data(), 32);
    return out;
}

ClientHello ClientHello::parse(ByteSpan raw) {
    if (raw.size() != kHelloSize) throw EnclaveError("bad hello length");
    ClientHello h;
    std::memcpy(h.nonce.data(), raw.data(), 32);
    std::memcpy(h.dh_public.data(), raw.data() + 32, 32);
    return h;
}

Bytes AttestationQuote::serialize() const {
    Bytes out(kQuoteSize);
    std::memcpy(out.data(), measurement.data(), 32);
    std::memcpy(out.data() + 32, dh_public.data(), 32);
    std::memcpy(out.data() + 64, client_nonce.data(), 32);
    std::memcpy(out.data() + 96, mac.data(), 32);
    return out;
}

AttestationQuote AttestationQuote::parse(ByteSpan raw) {
    if (raw.size() != kQuoteSize) throw EnclaveError("bad quote length");
    AttestationQuote q;
    std::memcpy(q.measurement.data(), raw.data(), 32);
    std::memcpy(q.dh_public.data(), raw.data() + 32, 32);
    std::memcpy(q.client_nonce.data(), raw.data() + 64, 32);
    std::memcpy(q.mac.data(), raw.data() + 96, 32);
    return q;
}

Hash256 enclave_measurement() {
    static constexpr char kIdentity[] = "t3d oblivious utxo service build 1";
    return crypto::sha256(
        ByteSpan(reinterpret_cast<const uint8_t*>(kIdentity), sizeof(kIdentity) - 1));
}

ClientHello make_client_hello(crypto::X25519KeyPair& ephemeral_out) {
    ephemeral_out = crypto::x25519_keypair();
    ClientHello h;
    crypto::random_bytes(h.nonce.data(), h.nonce.size());
    h.dh_public = ephemeral_out.public_key;
    return h;
}

AttestationQuote attest_server(const Key256& attest_root, const ClientHello& hello,
                               Session& session_out) {
    auto eph = crypto::x25519_keypair();
    AttestationQuote q;
    q.measurement = enclave_measurement();
    q.dh_public = eph.public_key;
    q.client_nonce = hello.nonce;
    q.mac = crypto::hmac_sha256(ByteSpan(attest_root.data(), attest_root.size()),
                                quote_message(q));
    auto shared = crypto::x25519_shared(eph.secret_key, hello.dh_public);
    session_out = derive_session(Role::Server, shared, hello, eph.public_key);
    return q;
}

Session attest_client(const Key256& attest_root, const ClientHello& sent,
                      const crypto::X25519KeyPair& ephemeral, const AttestationQuote& quote) {
    if (!ct_equal(ByteSpan(quote.client_nonce.data(), 32), ByteSpan(sent.nonce.data(), 32)))
        throw StaleNonce("quote issued for a different nonce");
    Hash256 want = crypto::hmac_sha256(ByteSpan(attest_root.data(), attest_root.size()),
                                       quote_message(quote));
    if (!ct_equal(ByteSpan(want.data(), 32), ByteSpan(quote.mac.data(), 32)))
        throw QuoteInvalid("quote MAC mismatch");
    auto shared = crypto::x25519_shared(ephemeral.secret_key, quote.dh_public);
    return derive_session(Role::Client, shared, sent, quote.dh_public);
}

Bytes seal(Session& session, ByteSpan plaintext) {
    uint64_t counter = session.send_counter++;
    Bytes frame(kFrameOverhead + plaintext.size());
    put_u32be(frame.data(), static_cast<uint32_t>(8 + plaintext.size() + 16));
    put_u64be(frame.data() + 4, counter);
    auto nonce = frame_nonce(session.role, counter);
    Bytes sealed = crypto::aead_seal(session.shared_key, nonce, plaintext,
                                     ByteSpan(frame.data(), 12));
    std::memcpy(frame.data() + 12, sealed.data(), sealed.size());
    return frame;
}

Bytes unseal(Session& session, ByteSpan frame) {
    if (frame.size() < kFrameOverhead) throw AuthFail("frame truncated");
    uint32_t len = get_u32be(frame.data());
    if (len != frame.size() - 4) throw AuthFail("frame length mismatch");
    uint64_t counter = get_u64be(frame.data() + 4);
    if (counter != session.recv_counter)
        throw ReplayDetected(counter < session.recv_counter ? "frame counter replayed"
                                                            : "frame counter skipped ahead");
    Role sender = session.role == Role::Client ? Role::Server : Role::Client;
    auto nonce = frame_nonce(sender, counter);
    auto plain = crypto::aead_open(session.shared_key, nonce,
                                   ByteSpan(frame.data() + 12, frame.size() - 12),
                                   ByteSpan(frame.data(), 12));
    if (!plain) throw AuthFail("frame failed authentication");
    session.recv_counter++; // only counted once the tag verifies
    return std::move(*plain);
}

Bytes OwnershipProof::serialize() const {
    Bytes out;
    out.reserve(20 + 4 + pubkey.size() + signature.size());
    out.insert(out.end(), pkh.begin(), pkh.end());
    out.resize(out.size() + 2);
    put_u16be(out.data() + out.size() - 2, static_cast<uint16_t>(pubkey.size()));
    out.insert(out.end(), pubkey.begin(), pubkey.end());
    out.resize(out.size() + 2);
    put_u16be(out.data() + out.size() - 2, static_cast<uint16_t>(signature.size()));
    out.insert(out.end(), signature.begin(), signature.end());
    return out;
}

OwnershipProof OwnershipProof::parse(ByteSpan raw) {
    if (raw.size() < 24) throw EnclaveError("proof truncated");
    OwnershipProof p;
    std::copy(raw.begin(), raw.begin() + 20, p.pkh.begin());
    size_t pos = 20;
    uint16_t klen = get_u16be(raw.data() + pos);
    pos += 2;
    if (pos + klen + 2 > raw.size()) throw EnclaveError("proof pubkey overruns");
    p.pubkey.assign(raw.begin() + pos, raw.begin() + pos + klen);
    pos += klen;
    uint16_t slen = get_u16be(raw.data() + pos);
    pos += 2;
    if (pos + slen != raw.size()) throw EnclaveError("proof signature length mismatch");
    p.signature.assign(raw.begin() + pos, raw.begin() + pos + slen);
    return p;
}

Bytes ownership_message(const Hash160& pkh, const Session& session) {
    Bytes m;
    m.reserve(52);
    m.insert(m.end(), pkh.begin(), pkh.end());
    m.insert(m.end(), session.session_nonce.begin(), session.session_nonce.end());
    return m;
}

bool verify_ownership(const OwnershipProof& proof, const Hash160& pkh, const Session& session,
                      bool require_signature) {
    if (proof.pubkey.empty()) return false;
    if (!ct_equal(ByteSpan(proof.pkh.data(), 20), ByteSpan(pkh.data(), 20))) return false;
    Hash160 h = crypto::hash160(proof.pubkey);
    if (!ct_equal(ByteSpan(h.data(), 20), ByteSpan(pkh.data(), 20))) return false;
    if (require_signature) {
        if (proof.pubkey.size() != 32 || proof.signature.size() != 64) return false;
        std::array<uint8_t, 32> pub;
        std::copy(proof.pubkey.begin(), proof.pubkey.end(), pub.begin());
        return crypto::ed25519_verify(pub, ownership_message(pkh, session), proof.signature);
    }
    return true;
}

}  // namespace t3::enclave
