#pragma once

#include "t3/bytes.hpp"

#include <optional>

namespace t3::crypto {

inline constexpr size_t kAeadNonceSize = 12;
inline constexpr size_t kAeadTagSize = 16;

Hash256 sha256(ByteSpan data);
Hash256 dsha256(ByteSpan data);
Hash256 hmac_sha256(ByteSpan key, ByteSpan data);

// Address hashing mode. RIPEMD160(SHA256(x)) matches Bitcoin semantics;
// the truncated variant exists for builds without a usable RIPEMD provider.
enum class Hash160Mode { Ripemd160Sha256, TruncatedSha256 };

void set_hash160_mode(Hash160Mode mode);
Hash160Mode hash160_mode();
bool ripemd160_available();
Hash160 hash160(ByteSpan data);

void random_bytes(uint8_t* out, size_t len);
Key256 random_key();

// AES-256-GCM. Output of seal is ciphertext (same length as plaintext)
// followed by the 16-byte tag. open returns nullopt on any authentication failure.
Bytes aead_seal(const Key256& key, const std::array<uint8_t, kAeadNonceSize>& nonce,
                ByteSpan plaintext, ByteSpan aad);
std::optional<Bytes> aead_open(const Key256& key, const std::array<uint8_t, kAeadNonceSize>& nonce,
                               ByteSpan sealed, ByteSpan aad);

struct X25519KeyPair {
    std::array<uint8_t, 32> public_key;
    std::array<uint8_t, 32> secret_key;
};

X25519KeyPair x25519_keypair();
std::array<uint8_t, 32> x25519_shared(const std::array<uint8_t, 32>& secret_key,
                                      const std::array<uint8_t, 32>& peer_public);

struct Ed25519KeyPair {
    std::array<uint8_t, 32> public_key;
    std::array<uint8_t, 32> secret_seed;
};

Ed25519KeyPair ed25519_keypair();
Ed25519KeyPair ed25519_from_seed(const std::array<uint8_t, 32>& seed);
std::array<uint8_t, 64> ed25519_sign(const std::array<uint8_t, 32>& seed, ByteSpan message);
bool ed25519_verify(const std::array<uint8_t, 32>& public_key, ByteSpan message,
                    ByteSpan signature);

}  // namespace t3::crypto
