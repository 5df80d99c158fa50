#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace cr2 {

/// Outcome of re-deriving the golden vector files shipped in tests/vectors.
struct VectorReport {
  std::size_t checked = 0;
  std::vector<std::string> failures;

  bool ok() const noexcept { return failures.empty() && checked > 0; }
  void merge(const VectorReport& other);
};

/// Lines: keccak / chain / eip712 / sign records (see the file header).
VectorReport check_crypto_vectors(const std::filesystem::path& file);
/// Lines: merkle <n> <comma-separated leaves> <root>
VectorReport check_merkle_vectors(const std::filesystem::path& file);
/// Both files from a directory.
VectorReport check_all_vectors(const std::filesystem::path& dir);

}  // namespace cr2
