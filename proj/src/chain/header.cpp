#include "t3/chain/header.hpp"

#include "t3/crypto.hpp"

#include <cstring>

namespace t3::chain {

std::array<uint8_t, kHeaderSize> BlockHeader::serialize() const {
    std::array<uint8_t, kHeaderSize> out;
    put_u32le(out.data(), static_cast<uint32_t>(version));
    std::memcpy(out.data() + 4, prev_hash.data(), 32);
    std::memcpy(out.data() + 36, merkle_root.data(), 32);
    put_u32le(out.data() + 68, timestamp);
    put_u32le(out.data() + 72, nbits);
    put_u32le(out.data() + 76, nonce);
    return out;
}

BlockHeader BlockHeader::parse(ByteSpan raw) {
    if (raw.size() != kHeaderSize) throw std::invalid_argument("header must be 80 bytes");
    BlockHeader h;
    h.version = static_cast<int32_t>(get_u32le(raw.data()));
    std::memcpy(h.prev_hash.data(), raw.data() + 4, 32);
    std::memcpy(h.merkle_root.data(), raw.data() + 36, 32);
    h.timestamp = get_u32le(raw.data() + 68);
    h.nbits = get_u32le(raw.data() + 72);
    h.nonce = get_u32le(raw.data() + 76);
    return h;
}

Hash256 BlockHeader::hash() const {
    auto ser = serialize();
    return crypto::dsha256(ByteSpan(ser.data(), ser.size()));
}

std::optional<uint256> decode_nbits(uint32_t nbits) {
    uint32_t exponent = nbits >> 24;
    uint32_t mantissa = nbits & 0x007fffff;
    if (nbits & 0x00800000) return std::nullopt; // sign bit: negative target
    if (mantissa == 0) return std::nullopt;
    // overflow: the same rule Bitcoin applies when expanding the compact form
    if (exponent > 34 || (exponent == 34 && mantissa > 0xff) ||
        (exponent == 33 && mantissa > 0xffff))
        return std::nullopt;
    uint256 target = mantissa;
    if (exponent <= 3)
        target >>= 8 * (3 - exponent);
    else
        target <<= 8 * (exponent - 3);
    if (target == 0) return std::nullopt;
    return target;
}

uint256 hash_to_uint(const Hash256& h) {
    uint256 v = 0;
    for (size_t i = 32; i-- > 0;) {
        v <<= 8;
        v |= h[i];
    }
    return v;
}

bool check_pow(const BlockHeader& header) {
    auto target = decode_nbits(header.nbits);
    if (!target) return false;
    return hash_to_uint(header.hash()) <= *target;
}

BlockHeader mine(BlockHeader header, uint32_t nbits, uint64_t* tries_out) {
    header.nbits = nbits;
    auto target = decode_nbits(nbits);
    if (!target) throw MiningExhausted("nbits does not decode to a target");
    for (uint64_t nonce = 0; nonce <= 0xFFFFFFFFull; ++nonce) {
        header.nonce = static_cast<uint32_t>(nonce);
        if (hash_to_uint(header.hash()) <= *target) {
            if (tries_out) *tries_out = nonce + 1;
            return header;
        }
    }
    throw MiningExhausted("nonce space exhausted");
}

}  // namespace t3::chain
