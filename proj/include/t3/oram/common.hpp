#pragma once

#include <stdexcept>
#include <string>

namespace t3::oram {

enum class Strategy { PathOram, CircuitOram };
enum class OpKind { Read, Write };

struct OramError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// MAC or Merkle mismatch on a bucket: the tree was tampered with.
struct IntegrityViolation : OramError {
    using OramError::OramError;
};

// Stash occupancy would exceed max_stash. Fatal by design, never silently spilled.
struct StashOverflow : OramError {
    using OramError::OramError;
};

}  // namespace t3::oram
