#pragma once

#include "t3/bytes.hpp"

namespace t3::enclave {

struct SelectStats {
    uint64_t records_touched = 0;
};

// Constant-trace linear select over `count` fixed-stride records. Touches
// every byte of every record exactly once, in order, regardless of where (or
// whether) the key matches; the matching record is combined into `out` with
// branch-free masking. Returns true iff some record matched (last match wins).
// `out` must hold `stride` bytes and supplies the result for the no-match case.
bool oblivious_select(const uint8_t* records, size_t count, size_t stride, size_t key_offset,
                      size_t key_len, const uint8_t* key, uint8_t* out,
                      SelectStats* stats = nullptr);

}  // namespace t3::enclave
