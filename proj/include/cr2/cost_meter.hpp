#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace cr2 {

/// Relative prices for collapsing a CostMeter into one number. Loosely
/// follows EVM pricing so the relative weight of storage, hashing and
/// signature checks is realistic; absolute values carry no meaning.
struct WorkWeights {
  std::uint64_t transaction = 21000;
  std::uint64_t signature_verification = 3000;
  std::uint64_t keccak_invocation = 36;
  std::uint64_t storage_write = 20000;
  std::uint64_t merkle_leaf = 6;
};

/// Abstract on-chain work, counted per ledger call. Stands in for gas.
struct CostMeter {
  std::uint64_t transactions = 0;
  std::uint64_t signature_verifications = 0;
  std::uint64_t keccak_invocations = 0;
  std::uint64_t storage_writes = 0;
  std::uint64_t merkle_leaves_hashed = 0;

  static constexpr std::array<std::string_view, 5> kCounterNames = {
      "transactions", "signatureVerifications", "keccakInvocations", "storageWrites", "merkleLeavesHashed"};

  std::array<std::uint64_t, 5> values() const noexcept {
    return {transactions, signature_verifications, keccak_invocations, storage_writes, merkle_leaves_hashed};
  }

  std::uint64_t work(const WorkWeights& w = {}) const noexcept;

  CostMeter& operator+=(const CostMeter& o) noexcept;
  friend CostMeter operator+(CostMeter a, const CostMeter& b) noexcept { return a += b; }
  bool operator==(const CostMeter&) const = default;
};

}  // namespace cr2
