#pragma once

#include "t3/bytes.hpp"

#include <vector>

namespace t3::chain {

// Merkle root over txids, Bitcoin style: pairs are concatenated and
// double-SHA256 hashed; an odd row duplicates its last entry. Empty
// input is a caller error (a block always has a coinbase).
Hash256 merkle_root(const std::vector<Hash256>& txids);

}  // namespace t3::chain
