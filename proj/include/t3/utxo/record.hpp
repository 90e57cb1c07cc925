#pragma once

#include "t3/bytes.hpp"

#include <stdexcept>
#include <vector>

namespace t3::utxo {

struct MalformedPayload : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BlockFull : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr size_t kRecordSize = 68;
inline constexpr uint64_t kMaxAmount = 21'000'000ull * 100'000'000ull;

// One pruned transaction output. txid is kept in natural (internal) byte
// order; integers serialize big-endian. A record whose txid is all zero is a
// dummy (padding) record.
struct UtxoRecord {
    Hash256 txid{};
    uint32_t vout = 0;
    uint64_t amount = 0;
    uint32_t height = 0;
    Hash160 pkh{};

    bool is_dummy() const {
        for (uint8_t b : txid)
            if (b != 0) return false;
        return true;
    }

    void serialize_into(uint8_t* out) const;
    std::array<uint8_t, kRecordSize> serialize() const;
    static UtxoRecord parse(const uint8_t* in); // throws MalformedPayload on bad amount

    bool operator==(const UtxoRecord&) const = default;
};

}  // namespace t3::utxo
