#include "cr2/cost_meter.hpp"

namespace cr2 {

std::uint64_t CostMeter::work(const WorkWeights& w) const noexcept {
  return transactions * w.transaction + signature_verifications * w.signature_verification +
         keccak_invocations * w.keccak_invocation + storage_writes * w.storage_write +
         merkle_leaves_hashed * w.merkle_leaf;
}

CostMeter& CostMeter::operator+=(const CostMeter& o) noexcept {
  transactions += o.transactions;
  signature_verifications += o.signature_verifications;
  keccak_invocations += o.keccak_invocations;
  storage_writes += o.storage_writes;
  merkle_leaves_hashed += o.merkle_leaves_hashed;
  return *this;
}

}  // namespace cr2
