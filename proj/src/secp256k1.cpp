#include "cr2/secp256k1.hpp"

#include "cr2/error.hpp"
#include "cr2/keccak.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>

#include <memory>

namespace cr2 {

const Bytes32 kCurveOrder =
    Bytes32::from_hex("fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141");
const Bytes32 kLowSBound =
    Bytes32::from_hex("7fffffffffffffffffffffffffffffff5d576e7357a4501ddfe92f46681b20a0");

namespace {

struct BnDeleter {
  void operator()(BIGNUM* p) const noexcept { BN_clear_free(p); }
};
struct CtxDeleter {
  void operator()(BN_CTX* p) const noexcept { BN_CTX_free(p); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const noexcept { EC_POINT_free(p); }
};
struct GroupDeleter {
  void operator()(EC_GROUP* p) const noexcept { EC_GROUP_free(p); }
};

using Bn = std::unique_ptr<BIGNUM, BnDeleter>;
using Ctx = std::unique_ptr<BN_CTX, CtxDeleter>;
using Point = std::unique_ptr<EC_POINT, PointDeleter>;

const EC_GROUP* curve() {
  static const std::unique_ptr<EC_GROUP, GroupDeleter> group(EC_GROUP_new_by_curve_name(NID_secp256k1));
  return group.get();
}

[[noreturn]] void openssl_failure(Errc code, const char* what) {
  ERR_clear_error();
  throw ProtocolError(code, what);
}

Bn make_bn() {
  Bn bn(BN_new());
  if (!bn) openssl_failure(Errc::InvalidArgument, "BN_new");
  return bn;
}

Bn to_bn(const Bytes32& value) {
  Bn bn(BN_bin2bn(value.bytes.data(), 32, nullptr));
  if (!bn) openssl_failure(Errc::InvalidArgument, "BN_bin2bn");
  return bn;
}

Bytes32 from_bn(const BIGNUM* bn) {
  Bytes32 out;
  if (BN_bn2binpad(bn, out.bytes.data(), 32) != 32) openssl_failure(Errc::InvalidArgument, "BN_bn2binpad");
  return out;
}

Point make_point() {
  Point p(EC_POINT_new(curve()));
  if (!p) openssl_failure(Errc::InvalidArgument, "EC_POINT_new");
  return p;
}

std::array<std::uint8_t, 64> affine_xy(const EC_POINT* p, BN_CTX* ctx) {
  std::array<std::uint8_t, 65> buf{};
  if (EC_POINT_point2oct(curve(), p, POINT_CONVERSION_UNCOMPRESSED, buf.data(), buf.size(), ctx) != buf.size())
    openssl_failure(Errc::InvalidSignature, "point2oct");
  std::array<std::uint8_t, 64> xy;
  std::copy(buf.begin() + 1, buf.end(), xy.begin());
  return xy;
}

Bytes32 hmac_sha256(const Bytes32& key, ByteView data) {
  Bytes32 out;
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.bytes.data(), 32, data.data(), data.size(), out.bytes.data(), &len) || len != 32)
    openssl_failure(Errc::InvalidArgument, "HMAC");
  return out;
}

bool in_scalar_range(const Bytes32& v) noexcept { return !v.is_zero() && v < kCurveOrder; }

/// RFC 6979 section 3.2 candidate stream for a 256-bit order and hash.
class NonceStream {
 public:
  NonceStream(const Bytes32& key, const Bytes32& hash_mod_n) : x_(key), h_(hash_mod_n) {
    v_.bytes.fill(0x01);
    k_.bytes.fill(0x00);
    k_ = hmac_sha256(k_, seed_block(0x00));
    v_ = hmac_sha256(k_, v_.view());
    k_ = hmac_sha256(k_, seed_block(0x01));
    v_ = hmac_sha256(k_, v_.view());
  }

  Bytes32 next() {
    if (started_) {
      std::array<std::uint8_t, 33> buf{};
      std::copy(v_.bytes.begin(), v_.bytes.end(), buf.begin());
      k_ = hmac_sha256(k_, ByteView(buf.data(), buf.size()));
      v_ = hmac_sha256(k_, v_.view());
    }
    started_ = true;
    v_ = hmac_sha256(k_, v_.view());
    return v_;
  }

 private:
  // V || sep || int2octets(x) || bits2octets(h)
  std::array<std::uint8_t, 97> seed_block_storage_{};
  ByteView seed_block(std::uint8_t sep) {
    auto& b = seed_block_storage_;
    std::copy(v_.bytes.begin(), v_.bytes.end(), b.begin());
    b[32] = sep;
    std::copy(x_.bytes.begin(), x_.bytes.end(), b.begin() + 33);
    std::copy(h_.bytes.begin(), h_.bytes.end(), b.begin() + 65);
    return ByteView(b.data(), b.size());
  }

  Bytes32 x_, h_, v_, k_;
  bool started_ = false;
};

}  // namespace

SigningKey::SigningKey(const Bytes32& scalar) : scalar_(scalar) {
  if (!in_scalar_range(scalar)) throw ProtocolError(Errc::InvalidKey, "scalar outside [1, n-1]");
  Ctx ctx(BN_CTX_new());
  Bn d = to_bn(scalar);
  Point q = make_point();
  if (!EC_POINT_mul(curve(), q.get(), d.get(), nullptr, nullptr, ctx.get()))
    openssl_failure(Errc::InvalidKey, "EC_POINT_mul");
  public_key_ = affine_xy(q.get(), ctx.get());
  address_ = address_from_public_key(ByteView(public_key_.data(), public_key_.size()));
}

SigningKey SigningKey::derive(std::string_view label) {
  Bytes32 candidate = keccak(label);
  while (!in_scalar_range(candidate)) candidate = keccak(candidate.view());
  return SigningKey(candidate);
}

Address address_from_public_key(ByteView xy) {
  if (xy.size() != 64) throw ProtocolError(Errc::InvalidArgument, "public key must be 64 bytes");
  Digest32 h = keccak(xy);
  Address a;
  std::copy(h.bytes.begin() + 12, h.bytes.end(), a.bytes.begin());
  return a;
}

bool is_low_s(const Bytes32& s) noexcept { return s <= kLowSBound; }

RecoverableSignature sign(const Digest32& digest, const SigningKey& key) {
  Ctx ctx(BN_CTX_new());
  Bn n = to_bn(kCurveOrder);
  Bn d = to_bn(key.scalar());
  Bn z = to_bn(digest);
  Bn z_mod = make_bn();
  BN_nnmod(z_mod.get(), z.get(), n.get(), ctx.get());

  NonceStream nonces(key.scalar(), from_bn(z_mod.get()));
  Bn x = make_bn(), y = make_bn(), r = make_bn(), s = make_bn(), tmp = make_bn();
  Point big_r = make_point();
  for (;;) {
    Bytes32 k_bytes = nonces.next();
    if (!in_scalar_range(k_bytes)) continue;
    Bn k = to_bn(k_bytes);
    if (!EC_POINT_mul(curve(), big_r.get(), k.get(), nullptr, nullptr, ctx.get()) ||
        !EC_POINT_get_affine_coordinates(curve(), big_r.get(), x.get(), y.get(), ctx.get()))
      openssl_failure(Errc::InvalidKey, "nonce point");
    int recid = BN_is_odd(y.get()) ? 1 : 0;
    if (BN_cmp(x.get(), n.get()) >= 0) recid |= 2;
    BN_nnmod(r.get(), x.get(), n.get(), ctx.get());
    if (BN_is_zero(r.get())) continue;

    // s = k^-1 (z + r d) mod n
    BN_mod_mul(tmp.get(), r.get(), d.get(), n.get(), ctx.get());
    BN_mod_add(tmp.get(), tmp.get(), z_mod.get(), n.get(), ctx.get());
    Bn k_inv(BN_mod_inverse(nullptr, k.get(), n.get(), ctx.get()));
    if (!k_inv) openssl_failure(Errc::InvalidKey, "nonce inverse");
    BN_mod_mul(s.get(), k_inv.get(), tmp.get(), n.get(), ctx.get());
    if (BN_is_zero(s.get())) continue;

    RecoverableSignature sig;
    sig.r = from_bn(r.get());
    sig.s = from_bn(s.get());
    if (!is_low_s(sig.s)) {
      BN_sub(s.get(), n.get(), s.get());
      sig.s = from_bn(s.get());
      recid ^= 1;
    }
    // x >= n cannot be expressed with v in {27, 28}; take the next nonce.
    if (recid & 2) continue;
    sig.v = static_cast<std::uint8_t>(27 + recid);
    return sig;
  }
}

Address recover(const Digest32& digest, const RecoverableSignature& sig, SRule rule) {
  if (sig.v != 27 && sig.v != 28) throw ProtocolError(Errc::InvalidSignature, "v must be 27 or 28");
  if (!in_scalar_range(sig.r) || !in_scalar_range(sig.s))
    throw ProtocolError(Errc::InvalidSignature, "r or s out of range");
  if (rule == SRule::LowOnly && !is_low_s(sig.s)) throw ProtocolError(Errc::MalleableSignature);

  Ctx ctx(BN_CTX_new());
  Bn n = to_bn(kCurveOrder);
  Bn r = to_bn(sig.r);
  Bn s = to_bn(sig.s);
  Bn z = to_bn(digest);

  Point big_r = make_point();
  if (!EC_POINT_set_compressed_coordinates(curve(), big_r.get(), r.get(), sig.v - 27, ctx.get()))
    openssl_failure(Errc::InvalidSignature, "r is not an x-coordinate on the curve");

  // Q = r^-1 (s R - z G)
  Bn r_inv(BN_mod_inverse(nullptr, r.get(), n.get(), ctx.get()));
  if (!r_inv) openssl_failure(Errc::InvalidSignature, "r inverse");
  Bn u1 = make_bn(), u2 = make_bn(), zero = make_bn();
  BN_zero(zero.get());
  BN_nnmod(z.get(), z.get(), n.get(), ctx.get());
  BN_mod_sub(u1.get(), zero.get(), z.get(), n.get(), ctx.get());
  BN_mod_mul(u1.get(), u1.get(), r_inv.get(), n.get(), ctx.get());
  BN_mod_mul(u2.get(), s.get(), r_inv.get(), n.get(), ctx.get());

  Point q = make_point();
  if (!EC_POINT_mul(curve(), q.get(), u1.get(), big_r.get(), u2.get(), ctx.get()))
    openssl_failure(Errc::InvalidSignature, "EC_POINT_mul");
  if (EC_POINT_is_at_infinity(curve(), q.get())) throw ProtocolError(Errc::InvalidSignature, "point at infinity");
  auto xy = affine_xy(q.get(), ctx.get());
  return address_from_public_key(ByteView(xy.data(), xy.size()));
}

bool verify_signature(const Digest32& digest, const RecoverableSignature& sig, const Address& signer) noexcept {
  try {
    return recover(digest, sig) == signer;
  } catch (...) {
    return false;
  }
}

RecoverableSignature malleate(const RecoverableSignature& sig) {
  Ctx ctx(BN_CTX_new());
  Bn n = to_bn(kCurveOrder);
  Bn s = to_bn(sig.s);
  BN_sub(s.get(), n.get(), s.get());
  RecoverableSignature out = sig;
  out.s = from_bn(s.get());
  out.v = sig.v == 27 ? 28 : 27;
  return out;
}

}  // namespace cr2
