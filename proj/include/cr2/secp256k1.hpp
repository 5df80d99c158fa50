#pragma once

#include "cr2/bytes.hpp"

namespace cr2 {

/// Ethereum-style recoverable ECDSA signature over secp256k1. `v` is 27 or 28.
struct RecoverableSignature {
  std::uint8_t v = 27;
  Bytes32 r;
  Bytes32 s;

  bool operator==(const RecoverableSignature&) const = default;
};

/// Group order n of secp256k1.
extern const Bytes32 kCurveOrder;
/// floor(n / 2); signatures with s above this are rejected.
extern const Bytes32 kLowSBound;

/// Private scalar in [1, n-1]. The address is derived once at construction.
class SigningKey {
 public:
  /// Throws ProtocolError(InvalidKey) when the scalar is zero or >= n.
  explicit SigningKey(const Bytes32& scalar);

  /// Deterministic key for simulations: keccak(label) iterated until it lands
  /// in range.
  static SigningKey derive(std::string_view label);

  const Bytes32& scalar() const noexcept { return scalar_; }
  const Address& address() const noexcept { return address_; }
  /// Uncompressed public key without the 0x04 prefix (X || Y).
  const std::array<std::uint8_t, 64>& public_key() const noexcept { return public_key_; }

 private:
  Bytes32 scalar_;
  std::array<std::uint8_t, 64> public_key_{};
  Address address_;
};

/// Low 20 bytes of keccak(X || Y).
Address address_from_public_key(ByteView xy);

bool is_low_s(const Bytes32& s) noexcept;

/// Deterministic (RFC 6979, HMAC-SHA256) signing with low-s normalization.
RecoverableSignature sign(const Digest32& digest, const SigningKey& key);

enum class SRule { LowOnly, AllowHigh };

/// ecrecover. With the default rule, s > n/2 throws MalleableSignature;
/// anything else that does not yield a curve point throws InvalidSignature.
/// AllowHigh exists only to demonstrate that the malleated form recovers.
Address recover(const Digest32& digest, const RecoverableSignature& sig, SRule rule = SRule::LowOnly);

/// True iff recover() succeeds and yields `signer`.
bool verify_signature(const Digest32& digest, const RecoverableSignature& sig, const Address& signer) noexcept;

/// The other valid encoding of the same signature: (n - s) with v flipped.
/// recover() rejects the result; it exists to construct malleability cases.
RecoverableSignature malleate(const RecoverableSignature& sig);

}  // namespace cr2
