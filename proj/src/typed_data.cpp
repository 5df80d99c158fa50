#include "cr2/typed_data.hpp"

#include "cr2/keccak.hpp"

namespace cr2 {

namespace {

const Digest32& domain_type_hash() {
  static const Digest32 h =
      keccak(std::string_view("EIP712Domain(string name,string version,uint256 chainId,address verifyingContract)"));
  return h;
}

const Digest32& message_type_hash() {
  static const Digest32 h = keccak(std::string_view("Message(uint256 round,uint256 trialNum,bytes32 cv)"));
  return h;
}

}  // namespace

Digest32 domain_separator(std::string_view name, std::string_view version, std::uint64_t chain_id,
                          const Address& ver_contract) noexcept {
  return keccak(concat(domain_type_hash().view(), keccak(name).view(), keccak(version).view(),
                       word_from_u64(chain_id).view(), word_from_address(ver_contract).view()));
}

Digest32 message_struct_hash(std::uint64_t round, std::uint64_t attempt_id, const Digest32& cv) noexcept {
  return keccak(concat(message_type_hash().view(), word_from_u64(round).view(), word_from_u64(attempt_id).view(),
                       cv.view()));
}

Digest32 typed_digest(const Digest32& separator, const Digest32& struct_hash) noexcept {
  static constexpr std::array<std::uint8_t, 2> prefix{0x19, 0x01};
  return keccak(concat(prefix, separator.view(), struct_hash.view()));
}

Digest32 typed_digest(const TypedMessage& msg, std::string_view domain_name, std::string_view domain_version) noexcept {
  return typed_digest(domain_separator(domain_name, domain_version, msg.chain_id, msg.ver_contract),
                      message_struct_hash(msg.round, msg.attempt_id, msg.cv));
}

}  // namespace cr2
