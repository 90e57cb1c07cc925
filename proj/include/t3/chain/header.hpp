#pragma once

#include "t3/bytes.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>

namespace t3::chain {

using uint256 = boost::multiprecision::uint256_t;

inline constexpr size_t kHeaderSize = 80;

// 80-byte Bitcoin-format header: little-endian integer fields, hashes in
// internal byte order.
struct BlockHeader {
    int32_t version = 0;
    Hash256 prev_hash{};
    Hash256 merkle_root{};
    uint32_t timestamp = 0;
    uint32_t nbits = 0;
    uint32_t nonce = 0;

    std::array<uint8_t, kHeaderSize> serialize() const;
    static BlockHeader parse(ByteSpan raw); // throws std::invalid_argument on bad length
    Hash256 hash() const;                   // double-SHA256 of the serialization

    bool operator==(const BlockHeader&) const = default;
};

// Compact difficulty decoding; rejects negative and overflowing encodings.
std::optional<uint256> decode_nbits(uint32_t nbits);

// 256-bit little-endian interpretation of a hash, for target comparison.
uint256 hash_to_uint(const Hash256& h);

// hash(header) <= target(nbits), the proof-of-work rule.
bool check_pow(const BlockHeader& header);

struct MiningExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Grinds the nonce until the proof of work holds (test/harness oracle).
// tries_out reports how many nonces were evaluated.
BlockHeader mine(BlockHeader header_template, uint32_t nbits, uint64_t* tries_out = nullptr);

}  // namespace t3::chain
