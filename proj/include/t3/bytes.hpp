#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace t3 {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

using Hash256 = std::array<uint8_t, 32>;
using Hash160 = std::array<uint8_t, 20>;
using Key256 = std::array<uint8_t, 32>;

inline void put_u16be(uint8_t* p, uint16_t v) {
    p[0] = uint8_t(v >> 8);
    p[1] = uint8_t(v);
}

inline void put_u32be(uint8_t* p, uint32_t v) {
    p[0] = uint8_t(v >> 24);
    p[1] = uint8_t(v >> 16);
    p[2] = uint8_t(v >> 8);
    p[3] = uint8_t(v);
}

inline void put_u64be(uint8_t* p, uint64_t v) {
    put_u32be(p, uint32_t(v >> 32));
    put_u32be(p + 4, uint32_t(v));
}

inline uint16_t get_u16be(const uint8_t* p) {
    return uint16_t(p[0]) << 8 | uint16_t(p[1]);
}

inline uint32_t get_u32be(const uint8_t* p) {
    return uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | uint32_t(p[3]);
}

inline uint64_t get_u64be(const uint8_t* p) {
    return uint64_t(get_u32be(p)) << 32 | get_u32be(p + 4);
}

inline void put_u32le(uint8_t* p, uint32_t v) {
    p[0] = uint8_t(v);
    p[1] = uint8_t(v >> 8);
    p[2] = uint8_t(v >> 16);
    p[3] = uint8_t(v >> 24);
}

inline void put_u64le(uint8_t* p, uint64_t v) {
    put_u32le(p, uint32_t(v));
    put_u32le(p + 4, uint32_t(v >> 32));
}

inline uint32_t get_u32le(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

inline uint64_t get_u64le(const uint8_t* p) {
    return uint64_t(get_u32le(p)) | uint64_t(get_u32le(p + 4)) << 32;
}

std::string to_hex(ByteSpan data);
Bytes from_hex(const std::string& hex);

// Constant-time comparison; length mismatch is reported without inspecting contents.
bool ct_equal(ByteSpan a, ByteSpan b);

}  // namespace t3
