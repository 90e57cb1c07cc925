#include "t3/chain/merkle.hpp"

#include "t3/crypto.hpp"

#include <cstring>
#include <stdexcept>

namespace t3::chain {

Hash256 merkle_root(const std::vector<Hash256>& txids) {
    if (txids.empty()) throw std::invalid_argument("merkle root of empty set");
    std::vector<Hash256> level = txids;
    std::array<uint8_t, 64> pair;
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<Hash256> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            std::memcpy(pair.data(), level[i].data(), 32);
            std::memcpy(pair.data() + 32, level[i + 1].data(), 32);
            next.push_back(crypto::dsha256(ByteSpan(pair.data(), pair.size())));
        }
        level = std::move(next);
    }
    return level[0];
}

}  // namespace t3::chain
