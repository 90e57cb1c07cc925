#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "t3/enclave/oblivious.hpp"
#include "t3/enclave/session.hpp"

#include <random>

using namespace t3;

namespace {

Key256 root_key(uint8_t tag) {
    Key256 k{};
    k.fill(tag);
    return k;
}

// A fully attested client/server session pair.
std::pair<enclave::Session, enclave::Session> handshake(const Key256& root) {
    crypto::X25519KeyPair eph{};
    enclave::ClientHello hello = enclave::make_client_hello(eph);
    enclave::Session server;
    enclave::AttestationQuote quote = enclave::attest_server(root, hello, server);
    enclave::Session client = enclave::attest_client(root, hello, eph, quote);
    return {client, server};
}

}  // namespace

TEST_CASE("oblivious select touches everything and finds the match") {
    std::mt19937_64 rng(3);
    const size_t stride = 12, count = 50;
    Bytes records(count * stride);
    for (auto& b : records) b = static_cast<uint8_t>(rng());
    // Plant a known key at record 17.
    uint8_t key[4] = {0xfe, 0xed, 0xca, 0xfe};
    std::memcpy(records.data() + 17 * stride + 2, key, 4);
    // Ensure no accidental second match.
    for (size_t i = 0; i < count; ++i)
        if (i != 17 && std::memcmp(records.data() + i * stride + 2, key, 4) == 0)
            records[i * stride + 2] ^= 0xff;

    Bytes out(stride, 0xAB);
    enclave::SelectStats stats;
    bool found =
        enclave::oblivious_select(records.data(), count, stride, 2, 4, key, out.data(), &stats);
    CHECK(found);
    CHECK(std::memcmp(out.data(), records.data() + 17 * stride, stride) == 0);
    CHECK(stats.records_touched == count);

    // No match: out keeps its caller-provided contents, same touch count.
    uint8_t missing[4] = {1, 2, 3, 4};
    for (size_t i = 0; i < count; ++i)
        if (std::memcmp(records.data() + i * stride + 2, missing, 4) == 0)
            records[i * stride + 2] ^= 0xff;
    Bytes sentinel(stride, 0xAB);
    out = sentinel;
    enclave::SelectStats stats2;
    found = enclave::oblivious_select(records.data(), count, stride, 2, 4, missing, out.data(),
                                      &stats2);
    CHECK_FALSE(found);
    CHECK(out == sentinel);
    CHECK(stats2.records_touched == count);

    // Empty input is a defined miss.
    CHECK_FALSE(enclave::oblivious_select(records.data(), 0, stride, 2, 4, key, out.data()));
}

TEST_CASE("attestation handshake derives one shared session") {
    Key256 root = root_key(0x11);
    auto [client, server] = handshake(root);
    CHECK(client.shared_key == server.shared_key);
    CHECK(client.session_id == server.session_id);
    CHECK(client.session_nonce == server.session_nonce);
    CHECK(client.role == enclave::Role::Client);
    CHECK(server.role == enclave::Role::Server);

    // Same root, fresh hello: different key (ephemeral DH).
    auto [c2, s2] = handshake(root);
    CHECK(c2.shared_key != client.shared_key);
    (void)s2;
}

TEST_CASE("quote verification failures") {
    Key256 root = root_key(0x22);
    crypto::X25519KeyPair eph{};
    enclave::ClientHello hello = enclave::make_client_hello(eph);
    enclave::Session server;
    enclave::AttestationQuote quote = enclave::attest_server(root, hello, server);

    SUBCASE("wrong root key") {
        CHECK_THROWS_AS(enclave::attest_client(root_key(0x23), hello, eph, quote),
                        enclave::QuoteInvalid);
    }
    SUBCASE("tampered measurement") {
        auto bad = quote;
        bad.measurement[0] ^= 1;
        CHECK_THROWS_AS(enclave::attest_client(root, hello, eph, bad), enclave::QuoteInvalid);
    }
    SUBCASE("tampered dh share") {
        auto bad = quote;
        bad.dh_public[5] ^= 1;
        CHECK_THROWS_AS(enclave::attest_client(root, hello, eph, bad), enclave::QuoteInvalid);
    }
    SUBCASE("stale nonce") {
        // Quote answers a different hello than the one we sent.
        crypto::X25519KeyPair eph2{};
        enclave::ClientHello hello2 = enclave::make_client_hello(eph2);
        enclave::Session server2;
        enclave::AttestationQuote quote2 = enclave::attest_server(root, hello2, server2);
        CHECK_THROWS_AS(enclave::attest_client(root, hello, eph, quote2), enclave::StaleNonce);
    }
    SUBCASE("serialization round trip") {
        auto raw = quote.serialize();
        auto back = enclave::AttestationQuote::parse(raw);
        CHECK(back.measurement == quote.measurement);
        CHECK(back.dh_public == quote.dh_public);
        CHECK(back.client_nonce == quote.client_nonce);
        CHECK(back.mac == quote.mac);
        CHECK_THROWS(enclave::AttestationQuote::parse(ByteSpan(raw.data(), raw.size() - 1)));
    }
}

TEST_CASE("sealed channel round trip in both directions") {
    auto [client, server] = handshake(root_key(0x33));
    Bytes msg = {'h', 'e', 'l', 'l', 'o'};

    Bytes frame = enclave::seal(client, msg);
    // Frame layout: 4-byte length, 8-byte counter, ciphertext, 16-byte tag.
    CHECK(frame.size() == 4 + 8 + msg.size() + 16);
    CHECK(get_u32be(frame.data()) == frame.size() - 4);
    CHECK(get_u64be(frame.data() + 4) == 0);
    CHECK(enclave::unseal(server, frame) == msg);

    Bytes reply = {'o', 'k'};
    Bytes rframe = enclave::seal(server, reply);
    CHECK(enclave::unseal(client, rframe) == reply);

    // Counters advance per direction.
    Bytes f2 = enclave::seal(client, msg);
    CHECK(get_u64be(f2.data() + 4) == 1);
    CHECK(enclave::unseal(server, f2) == msg);
}

TEST_CASE("replay and reordering are rejected") {
    auto [client, server] = handshake(root_key(0x44));
    Bytes m1 = {1}, m2 = {2};
    Bytes f1 = enclave::seal(client, m1);
    Bytes f2 = enclave::seal(client, m2);

    CHECK(enclave::unseal(server, f1) == m1);
    // Exact replay.
    CHECK_THROWS_AS(enclave::unseal(server, f1), enclave::ReplayDetected);
    // Accepting the next frame still works after a rejected replay.
    CHECK(enclave::unseal(server, f2) == m2);

    // Reordering: deliver counter 4 before counter 3.
    Bytes f3 = enclave::seal(client, m1);
    Bytes f4 = enclave::seal(client, m2);
    CHECK_THROWS_AS(enclave::unseal(server, f4), enclave::ReplayDetected);
    CHECK(enclave::unseal(server, f3) == m1);
    CHECK(enclave::unseal(server, f4) == m2);
}

TEST_CASE("sealed frames reject tampering and truncation") {
    auto [client, server] = handshake(root_key(0x55));
    Bytes msg(40, 0x77);
    Bytes frame = enclave::seal(client, msg);

    for (size_t pos : {size_t(13), frame.size() - 1}) {
        Bytes bad = frame;
        bad[pos] ^= 0x01;
        enclave::Session fresh = server;
        CHECK_THROWS_AS(enclave::unseal(fresh, bad), enclave::AuthFail);
    }
    // Counter tamper: alters the nonce, so authentication fails (or replay
    // if decremented to an already-seen value).
    {
        Bytes bad = frame;
        bad[11] ^= 0x01;
        enclave::Session fresh = server;
        CHECK_THROWS(enclave::unseal(fresh, bad));
    }
    {
        enclave::Session fresh = server;
        CHECK_THROWS_AS(enclave::unseal(fresh, ByteSpan(frame.data(), 10)), enclave::AuthFail);
    }
    // A frame sealed by one session cannot cross into another.
    auto [c2, s2] = handshake(root_key(0x55));
    (void)c2;
    CHECK_THROWS_AS(enclave::unseal(s2, frame), enclave::AuthFail);
}

TEST_CASE("role separation prevents reflection") {
    auto [client, server] = handshake(root_key(0x66));
    Bytes msg = {9, 9, 9};
    Bytes frame = enclave::seal(client, msg);
    // Bouncing a client frame back to the client must not decrypt.
    enclave::Session client_copy = client;
    CHECK_THROWS_AS(enclave::unseal(client_copy, frame), enclave::AuthFail);
    CHECK(enclave::unseal(server, frame) == msg);
}

TEST_CASE("ownership proofs") {
    auto [client, server] = handshake(root_key(0x77));

    std::array<uint8_t, 32> seed{};
    seed.fill(0x0F);
    auto kp = crypto::ed25519_from_seed(seed);
    Bytes pub(kp.public_key.begin(), kp.public_key.end());
    Hash160 pkh = crypto::hash160(pub);

    enclave::OwnershipProof proof;
    proof.pkh = pkh;
    proof.pubkey = pub;

    SUBCASE("preimage mode") {
        CHECK(enclave::verify_ownership(proof, pkh, server, false));
        Hash160 other{};
        other.fill(0xEE);
        CHECK_FALSE(enclave::verify_ownership(proof, other, server, false));
        auto wrong = proof;
        wrong.pubkey[0] ^= 1;
        CHECK_FALSE(enclave::verify_ownership(wrong, pkh, server, false));
    }

    SUBCASE("signature mode") {
        // Unsigned proof fails when a signature is demanded.
        CHECK_FALSE(enclave::verify_ownership(proof, pkh, server, true));

        Bytes msg = enclave::ownership_message(pkh, client);
        auto sig = crypto::ed25519_sign(seed, msg);
        proof.signature.assign(sig.begin(), sig.end());
        CHECK(enclave::verify_ownership(proof, pkh, server, true));

        // The message binds the session nonce: a proof from another session
        // does not transfer.
        auto [c2, s2] = handshake(root_key(0x77));
        (void)c2;
        CHECK_FALSE(enclave::verify_ownership(proof, pkh, s2, true));

        auto bad = proof;
        bad.signature[0] ^= 1;
        CHECK_FALSE(enclave::verify_ownership(bad, pkh, server, true));
    }

    SUBCASE("serialization round trip") {
        Bytes msg = enclave::ownership_message(pkh, client);
        auto sig = crypto::ed25519_sign(seed, msg);
        proof.signature.assign(sig.begin(), sig.end());
        auto raw = proof.serialize();
        auto back = enclave::OwnershipProof::parse(raw);
        CHECK(back.pkh == proof.pkh);
        CHECK(back.pubkey == proof.pubkey);
        CHECK(back.signature == proof.signature);
        CHECK_THROWS(enclave::OwnershipProof::parse(ByteSpan(raw.data(), 5)));
    }
}

TEST_CASE("measurement is stable") {
    CHECK(enclave::enclave_measurement() == enclave::enclave_measurement());
}
