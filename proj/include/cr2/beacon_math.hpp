#pragma once

#include "cr2/bytes.hpp"

#include <span>
#include <vector>

namespace cr2 {

/// Reveal order for the second layer. `permutation[p]` is the activation
/// index of the operator revealing at position p; `keys[p]` is its order key.
/// Keys are strictly decreasing as unsigned 256-bit integers.
struct RevealOrder {
  std::vector<std::size_t> permutation;
  std::vector<Digest32> keys;

  bool operator==(const RevealOrder&) const = default;

  std::size_t size() const noexcept { return permutation.size(); }
  /// Activation index of the final revealer.
  std::size_t last() const { return permutation.back(); }
};

/// keccak(inner_0 || inner_1 || ... ) in activation order.
Digest32 omega_v(std::span<const Digest32> inners);

/// d_i = keccak(omega_v || outer_i), aligned with `outers`.
std::vector<Digest32> order_keys(const Digest32& omega_v, std::span<const Digest32> outers);

/// Sorts activation indices by key, descending. Equal keys are a fault
/// (AmbiguousOrder) rather than being broken arbitrarily, matching the
/// strict adjacent check the contract applies.
RevealOrder reveal_order(std::span<const Digest32> keys);

/// True iff keys strictly decrease and the permutation is a bijection on
/// {0..n-1}.
bool verify_order(const RevealOrder& order) noexcept;

/// keccak(secret_0 || secret_1 || ...) in activation order; reveal timing
/// never affects the concatenation.
Digest32 omega_o(std::span<const Bytes32> secrets);

/// Everything an honest round derives from its activation-ordered secrets.
struct RoundOutcome {
  std::vector<Digest32> inners;
  std::vector<Digest32> outers;
  Digest32 omega_v;
  RevealOrder order;
  Digest32 omega_o;
};

RoundOutcome evaluate_round(std::span<const Bytes32> secrets);

}  // namespace cr2
