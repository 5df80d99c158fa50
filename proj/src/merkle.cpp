#include "cr2/merkle.hpp"

#include "cr2/error.hpp"
#include "cr2/keccak.hpp"

#include <vector>

namespace cr2 {

Digest32 merkle_root(std::span<const Digest32> leaves) {
  if (leaves.size() < 2) throw ProtocolError(Errc::TooFewLeaves, "need at least 2 leaves");

  const std::size_t hash_count = leaves.size() - 1;
  std::vector<Digest32> hashes;
  hashes.reserve(hash_count);
  std::size_t leaf_pos = 0;
  std::size_t hash_pos = 0;
  auto take = [&]() -> const Digest32& {
    if (leaf_pos < leaves.size()) return leaves[leaf_pos++];
    return hashes[hash_pos++];
  };
  for (std::size_t i = 0; i < hash_count; ++i) {
    const Digest32& first = take();
    const Digest32& second = take();
    hashes.push_back(keccak(first, second));
  }
  return hashes.back();
}

bool verify_set(std::span<const Digest32> leaves, const Digest32& committed_root) {
  return merkle_root(leaves) == committed_root;
}

}  // namespace cr2
