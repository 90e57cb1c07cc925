#include "t3/utxo/record.hpp"

#include <cstring>

namespace t3::utxo {

void UtxoRecord::serialize_into(uint8_t* out) const {
    std::memcpy(out, txid.data(), 32);
    put_u32be(out + 32, vout);
    put_u64be(out + 36, amount);
    put_u32be(out + 44, height);
    std::memcpy(out + 48, pkh.data(), 20);
}

std::array<uint8_t, kRecordSize> UtxoRecord::serialize() const {
    std::array<uint8_t, kRecordSize> out;
    serialize_into(out.data());
    return out;
}

UtxoRecord UtxoRecord::parse(const uint8_t* in) {
    UtxoRecord r;
    std::memcpy(r.txid.data(), in, 32);
    r.vout = get_u32be(in + 32);
    r.amount = get_u64be(in + 36);
    r.height = get_u32be(in + 44);
    std::memcpy(r.pkh.data(), in + 48, 20);
    if (!r.is_dummy() && r.amount > kMaxAmount)
        throw MalformedPayload("record amount exceeds coin supply");
    return r;
}

}  // namespace t3::utxo
