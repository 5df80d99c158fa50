#pragma once

#include "cr2/bytes.hpp"

namespace cr2 {

/// One operator's two-layer commitment for one attempt:
/// inner = keccak(secret), outer = keccak(inner).
struct CommitmentChain {
  Bytes32 secret;
  Digest32 inner;
  Digest32 outer;
};

CommitmentChain derive_chain(const Bytes32& secret) noexcept;

/// Throws ProtocolError(InvalidSecretLength) unless `secret` is exactly 32
/// bytes. Shorter input is rejected, never padded.
CommitmentChain derive_chain(ByteView secret);

}  // namespace cr2
