#pragma once

#include "cr2/bytes.hpp"

#include <span>

namespace cr2 {

/// Root over leaves in activation order, reproducing the contract's
/// iterative routine: n-1 hashing steps, each taking the next two items from
/// the unconsumed leaves first and then from the hashes produced so far.
/// For power-of-two counts this equals the complete binary tree.
///
/// Throws ProtocolError(TooFewLeaves) for fewer than two leaves.
Digest32 merkle_root(std::span<const Digest32> leaves);

/// Full-set reconstruction check used by every fallback verification.
bool verify_set(std::span<const Digest32> leaves, const Digest32& committed_root);

/// Number of keccak invocations merkle_root performs for `leaf_count` leaves.
constexpr std::size_t merkle_hash_count(std::size_t leaf_count) noexcept {
  return leaf_count < 2 ? 0 : leaf_count - 1;
}

}  // namespace cr2
