#pragma once

#include "cr2/bytes.hpp"

#include <string>

namespace cr2 {

/// The signed commit tuple. `attempt_id` is hashed under the type-string
/// field name `trialNum`; all integers are encoded as uint256 words.
struct TypedMessage {
  std::uint64_t chain_id = 1;
  Address ver_contract;
  std::uint64_t round = 0;
  std::uint64_t attempt_id = 0;
  Digest32 cv;

  bool operator==(const TypedMessage&) const = default;
};

inline constexpr std::string_view kDefaultDomainName = "Commit Reveal2";
inline constexpr std::string_view kDefaultDomainVersion = "1";

/// keccak(abi.encode(typeHash(EIP712Domain), keccak(name), keccak(version),
/// chainId, verifyingContract))
Digest32 domain_separator(std::string_view name, std::string_view version, std::uint64_t chain_id,
                          const Address& ver_contract) noexcept;

/// keccak(abi.encode(typeHash(Message), round, trialNum, cv))
Digest32 message_struct_hash(std::uint64_t round, std::uint64_t attempt_id, const Digest32& cv) noexcept;

/// keccak(0x1901 || separator || structHash)
Digest32 typed_digest(const Digest32& separator, const Digest32& struct_hash) noexcept;

Digest32 typed_digest(const TypedMessage& msg, std::string_view domain_name = kDefaultDomainName,
                      std::string_view domain_version = kDefaultDomainVersion) noexcept;

}  // namespace cr2
