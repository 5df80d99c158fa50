#include "cr2/commitment.hpp"

#include "cr2/error.hpp"
#include "cr2/keccak.hpp"

namespace cr2 {

CommitmentChain derive_chain(const Bytes32& secret) noexcept {
  CommitmentChain chain;
  chain.secret = secret;
  chain.inner = keccak(secret.view());
  chain.outer = keccak(chain.inner.view());
  return chain;
}

CommitmentChain derive_chain(ByteView secret) {
  if (secret.size() != 32)
    throw ProtocolError(Errc::InvalidSecretLength, "got " + std::to_string(secret.size()) + " bytes");
  return derive_chain(Bytes32::from_view(secret));
}

}  // namespace cr2
