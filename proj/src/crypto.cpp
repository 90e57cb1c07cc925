#include "t3/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/provider.h>
#include <openssl/rand.h>

#include <atomic>
#include <mutex>
#include <stdexcept>

namespace t3::crypto {

namespace {

[[noreturn]] void throw_openssl(const char* what) {
    unsigned long code = ERR_get_error();
    char buf[256] = {0};
    if (code != 0) ERR_error_string_n(code, buf, sizeof(buf));
    throw std::runtime_error(std::string(what) + ": " + (code ? buf : "unknown openssl error"));
}

void digest(const EVP_MD* md, ByteSpan data, uint8_t* out, size_t out_len) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw_openssl("EVP_MD_CTX_new");
    unsigned int got = 0;
    bool ok = EVP_DigestInit_ex(ctx, md, nullptr) == 1 &&
              EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, out, &got) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok || got != out_len) throw_openssl("digest");
}

// RIPEMD160 lives in the legacy provider on OpenSSL 3. Load it once, lazily;
// keep default loaded too so everything else keeps working.
const EVP_MD* fetch_ripemd160() {
    static std::once_flag once;
    static EVP_MD* md = nullptr;
    std::call_once(once, [] {
        md = EVP_MD_fetch(nullptr, "RIPEMD160", nullptr);
        if (!md) {
            OSSL_PROVIDER_load(nullptr, "default");
            if (OSSL_PROVIDER_load(nullptr, "legacy"))
                md = EVP_MD_fetch(nullptr, "RIPEMD160", nullptr);
        }
    });
    return md;
}

std::atomic<Hash160Mode> g_hash160_mode{Hash160Mode::Ripemd160Sha256};

}  // namespace

Hash256 sha256(ByteSpan data) {
    Hash256 out;
    digest(EVP_sha256(), data, out.data(), out.size());
    return out;
}

Hash256 dsha256(ByteSpan data) {
    Hash256 first = sha256(data);
    return sha256(ByteSpan(first.data(), first.size()));
}

Hash256 hmac_sha256(ByteSpan key, ByteSpan data) {
    Hash256 out;
    size_t out_len = out.size();
    EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    if (!mac) throw_openssl("EVP_MAC_fetch HMAC");
    EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(mac);
    EVP_MAC_free(mac);
    if (!ctx) throw_openssl("EVP_MAC_CTX_new");
    char digest_name[] = "SHA256";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
        OSSL_PARAM_construct_end(),
    };
    bool ok = EVP_MAC_init(ctx, key.data(), key.size(), params) == 1 &&
              EVP_MAC_update(ctx, data.data(), data.size()) == 1 &&
              EVP_MAC_final(ctx, out.data(), &out_len, out.size()) == 1;
    EVP_MAC_CTX_free(ctx);
    if (!ok || out_len != out.size()) throw_openssl("hmac_sha256");
    return out;
}

void set_hash160_mode(Hash160Mode mode) { g_hash160_mode.store(mode); }
Hash160Mode hash160_mode() { return g_hash160_mode.load(); }

bool ripemd160_available() { return fetch_ripemd160() != nullptr; }

Hash160 hash160(ByteSpan data) {
    Hash256 inner = sha256(data);
    Hash160 out;
    if (g_hash160_mode.load() == Hash160Mode::Ripemd160Sha256) {
        const EVP_MD* md = fetch_ripemd160();
        if (!md) throw std::runtime_error("hash160: RIPEMD160 unavailable (legacy provider missing)");
        digest(md, ByteSpan(inner.data(), inner.size()), out.data(), out.size());
    } else {
        Hash256 outer = sha256(ByteSpan(inner.data(), inner.size()));
        std::copy(outer.begin(), outer.begin() + out.size(), out.begin());
    }
    return out;
}

void random_bytes(uint8_t* out, size_t len) {
    if (RAND_bytes(out, static_cast<int>(len)) != 1) throw_openssl("RAND_bytes");
}

Key256 random_key() {
    Key256 k;
    random_bytes(k.data(), k.size());
    return k;
}

Bytes aead_seal(const Key256& key, const std::array<uint8_t, kAeadNonceSize>& nonce,
                ByteSpan plaintext, ByteSpan aad) {
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw_openssl("EVP_CIPHER_CTX_new");
    Bytes out(plaintext.size() + kAeadTagSize);
    int len = 0;
    bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) == 1;
    if (ok && !aad.empty())
        ok = EVP_EncryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
    if (ok && !plaintext.empty())
        ok = EVP_EncryptUpdate(ctx, out.data(), &len, plaintext.data(),
                               static_cast<int>(plaintext.size())) == 1 &&
             static_cast<size_t>(len) == plaintext.size();
    if (ok) ok = EVP_EncryptFinal_ex(ctx, out.data() + plaintext.size(), &len) == 1;
    if (ok)
        ok = EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kAeadTagSize,
                                 out.data() + plaintext.size()) == 1;
    EVP_CIPHER_CTX_free(ctx);
    if (!ok) throw_openssl("aead_seal");
    return out;
}

std::optional<Bytes> aead_open(const Key256& key, const std::array<uint8_t, kAeadNonceSize>& nonce,
                               ByteSpan sealed, ByteSpan aad) {
    if (sealed.size() < kAeadTagSize) return std::nullopt;
    size_t ct_len = sealed.size() - kAeadTagSize;
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw_openssl("EVP_CIPHER_CTX_new");
    Bytes out(ct_len);
    int len = 0;
    bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) == 1;
    if (ok && !aad.empty())
        ok = EVP_DecryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
    if (ok && ct_len > 0)
        ok = EVP_DecryptUpdate(ctx, out.data(), &len, sealed.data(), static_cast<int>(ct_len)) == 1 &&
             static_cast<size_t>(len) == ct_len;
    if (ok)
        ok = EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kAeadTagSize,
                                 const_cast<uint8_t*>(sealed.data() + ct_len)) == 1;
    if (ok) ok = EVP_DecryptFinal_ex(ctx, out.data() + ct_len, &len) == 1;
    EVP_CIPHER_CTX_free(ctx);
    if (!ok) return std::nullopt;
    return out;
}

namespace {

void raw_public_key(EVP_PKEY* pkey, uint8_t* out, size_t expect) {
    size_t len = expect;
    if (EVP_PKEY_get_raw_public_key(pkey, out, &len) != 1 || len != expect)
        throw_openssl("EVP_PKEY_get_raw_public_key");
}

void raw_private_key(EVP_PKEY* pkey, uint8_t* out, size_t expect) {
    size_t len = expect;
    if (EVP_PKEY_get_raw_private_key(pkey, out, &len) != 1 || len != expect)
        throw_openssl("EVP_PKEY_get_raw_private_key");
}

EVP_PKEY* keygen(int type) {
    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new_id(type, nullptr);
    if (!ctx) throw_openssl("EVP_PKEY_CTX_new_id");
    EVP_PKEY* pkey = nullptr;
    bool ok = EVP_PKEY_keygen_init(ctx) == 1 && EVP_PKEY_keygen(ctx, &pkey) == 1;
    EVP_PKEY_CTX_free(ctx);
    if (!ok) throw_openssl("EVP_PKEY_keygen");
    return pkey;
}

}  // namespace

X25519KeyPair x25519_keypair() {
    EVP_PKEY* pkey = keygen(EVP_PKEY_X25519);
    X25519KeyPair kp;
    raw_public_key(pkey, kp.public_key.data(), kp.public_key.size());
    raw_private_key(pkey, kp.secret_key.data(), kp.secret_key.size());
    EVP_PKEY_free(pkey);
    return kp;
}

std::array<uint8_t, 32> x25519_shared(const std::array<uint8_t, 32>& secret_key,
                                      const std::array<uint8_t, 32>& peer_public) {
    EVP_PKEY* sk = EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, secret_key.data(),
                                                secret_key.size());
    EVP_PKEY* pk = EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(),
                                               peer_public.size());
    if (!sk || !pk) {
        EVP_PKEY_free(sk);
        EVP_PKEY_free(pk);
        throw_openssl("x25519 key import");
    }
    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new(sk, nullptr);
    std::array<uint8_t, 32> out{};
    size_t out_len = out.size();
    bool ok = ctx && EVP_PKEY_derive_init(ctx) == 1 && EVP_PKEY_derive_set_peer(ctx, pk) == 1 &&
              EVP_PKEY_derive(ctx, out.data(), &out_len) == 1 && out_len == out.size();
    EVP_PKEY_CTX_free(ctx);
    EVP_PKEY_free(sk);
    EVP_PKEY_free(pk);
    if (!ok) throw_openssl("x25519_shared");
    return out;
}

Ed25519KeyPair ed25519_keypair() {
    EVP_PKEY* pkey = keygen(EVP_PKEY_ED25519);
    Ed25519KeyPair kp;
    raw_public_key(pkey, kp.public_key.data(), kp.public_key.size());
    raw_private_key(pkey, kp.secret_seed.data(), kp.secret_seed.size());
    EVP_PKEY_free(pkey);
    return kp;
}

Ed25519KeyPair ed25519_from_seed(const std::array<uint8_t, 32>& seed) {
    EVP_PKEY* pkey =
        EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
    if (!pkey) throw_openssl("ed25519 seed import");
    Ed25519KeyPair kp;
    kp.secret_seed = seed;
    raw_public_key(pkey, kp.public_key.data(), kp.public_key.size());
    EVP_PKEY_free(pkey);
    return kp;
}

std::array<uint8_t, 64> ed25519_sign(const std::array<uint8_t, 32>& seed, ByteSpan message) {
    EVP_PKEY* pkey =
        EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
    if (!pkey) throw_openssl("ed25519 seed import");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    std::array<uint8_t, 64> sig{};
    size_t sig_len = sig.size();
    bool ok = ctx && EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, pkey) == 1 &&
              EVP_DigestSign(ctx, sig.data(), &sig_len, message.data(), message.size()) == 1 &&
              sig_len == sig.size();
    EVP_MD_CTX_free(ctx);
    EVP_PKEY_free(pkey);
    if (!ok) throw_openssl("ed25519_sign");
    return sig;
}

bool ed25519_verify(const std::array<uint8_t, 32>& public_key, ByteSpan message,
                    ByteSpan signature) {
    if (signature.size() != 64) return false;
    EVP_PKEY* pkey = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(),
                                                 public_key.size());
    if (!pkey) return false;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    bool ok = ctx && EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, pkey) == 1 &&
              EVP_DigestVerify(ctx, signature.data(), signature.size(), message.data(),
                               message.size()) == 1;
    EVP_MD_CTX_free(ctx);
    EVP_PKEY_free(pkey);
    return ok;
}

}  // namespace t3::crypto
