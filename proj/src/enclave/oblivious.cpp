#include "t3/enclave/oblivious.hpp"

namespace t3::enclave {

bool oblivious_select(const uint8_t* records, size_t count, size_t stride, size_t key_offset,
                      size_t key_len, const uint8_t* key, uint8_t* out, SelectStats* stats) {
    uint8_t any = 0;
    for (size_t i = 0; i < count; ++i) {
        const uint8_t* rec = records + i * stride;
        uint32_t diff = 0;
        for (size_t j = 0; j < key_len; ++j) diff |= rec[key_offset + j] ^ key[j];
        // mask = 0xFF iff diff == 0, without branching on the comparison
        uint8_t mask = static_cast<uint8_t>((((diff | (0u - diff)) >> 31) & 1u) - 1u);
        for (size_t j = 0; j < stride; ++j)
            out[j] = static_cast<uint8_t>((out[j] & ~mask) | (rec[j] & mask));
        any |= mask & 1u;
    }
    if (stats) stats->records_touched += count;
    return any != 0;
}

}  // namespace t3::enclave
