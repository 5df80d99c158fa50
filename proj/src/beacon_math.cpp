#include "cr2/beacon_math.hpp"

#include "cr2/commitment.hpp"
#include "cr2/error.hpp"
#include "cr2/keccak.hpp"

#include <algorithm>
#include <numeric>

namespace cr2 {

namespace {

void require_participants(std::size_t n) {
  if (n < 2) throw ProtocolError(Errc::TooFewParticipants, "need at least 2 participants");
}

template <typename T>
Digest32 hash_concat(std::span<const T> items) {
  Bytes buf;
  buf.reserve(items.size() * 32);
  for (const auto& item : items) append(buf, item.view());
  return keccak(buf);
}

}  // namespace

Digest32 omega_v(std::span<const Digest32> inners) {
  require_participants(inners.size());
  return hash_concat(inners);
}

std::vector<Digest32> order_keys(const Digest32& omega, std::span<const Digest32> outers) {
  require_participants(outers.size());
  std::vector<Digest32> keys;
  keys.reserve(outers.size());
  for (const auto& cv : outers) keys.push_back(keccak(omega, cv));
  return keys;
}

RevealOrder reveal_order(std::span<const Digest32> keys) {
  require_participants(keys.size());
  RevealOrder order;
  order.permutation.resize(keys.size());
  std::iota(order.permutation.begin(), order.permutation.end(), std::size_t{0});
  std::sort(order.permutation.begin(), order.permutation.end(),
            [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  order.keys.reserve(keys.size());
  for (auto idx : order.permutation) order.keys.push_back(keys[idx]);
  for (std::size_t p = 1; p < order.keys.size(); ++p)
    if (order.keys[p - 1] == order.keys[p]) throw ProtocolError(Errc::AmbiguousOrder, "duplicate order key");
  return order;
}

bool verify_order(const RevealOrder& order) noexcept {
  const std::size_t n = order.permutation.size();
  if (n == 0 || order.keys.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto idx : order.permutation) {
    if (idx >= n || seen[idx]) return false;
    seen[idx] = true;
  }
  for (std::size_t p = 1; p < n; ++p)
    if (!(order.keys[p - 1] > order.keys[p])) return false;
  return true;
}

Digest32 omega_o(std::span<const Bytes32> secrets) {
  require_participants(secrets.size());
  return hash_concat(secrets);
}

RoundOutcome evaluate_round(std::span<const Bytes32> secrets) {
  require_participants(secrets.size());
  RoundOutcome out;
  out.inners.reserve(secrets.size());
  out.outers.reserve(secrets.size());
  for (const auto& s : secrets) {
    auto chain = derive_chain(s);
    out.inners.push_back(chain.inner);
    out.outers.push_back(chain.outer);
  }
  out.omega_v = omega_v(out.inners);
  out.order = reveal_order(order_keys(out.omega_v, out.outers));
  out.omega_o = omega_o(secrets);
  return out;
}

}  // namespace cr2
