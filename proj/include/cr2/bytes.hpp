#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cr2 {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Fixed-width opaque byte string. Comparison is lexicographic over the
/// big-endian bytes, which is the same as unsigned integer comparison.
template <std::size_t N, typename Tag>
struct FixedBytes {
  static constexpr std::size_t size = N;
  std::array<std::uint8_t, N> bytes{};

  constexpr auto operator<=>(const FixedBytes&) const = default;

  ByteView view() const noexcept { return ByteView(bytes.data(), N); }
  std::string hex() const;

  bool is_zero() const noexcept {
    for (auto b : bytes)
      if (b != 0) return false;
    return true;
  }

  /// Throws ProtocolError(InvalidArgument) on malformed input. Accepts an
  /// optional 0x prefix.
  static FixedBytes from_hex(std::string_view text);
  static FixedBytes from_view(ByteView data);
};

struct DigestTag {};
struct AddressTag {};

/// 32-byte hash value; also used for secrets and scalars.
using Digest32 = FixedBytes<32, DigestTag>;
using Bytes32 = Digest32;
/// 20-byte account identifier.
using Address = FixedBytes<20, AddressTag>;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view text);

/// 32-byte big-endian word holding an unsigned integer (uint256 ABI slot).
Digest32 word_from_u64(std::uint64_t value) noexcept;
/// Left-pads an address to a 32-byte ABI word.
Digest32 word_from_address(const Address& addr) noexcept;

/// Appends the given views to `out`.
inline void append(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

template <typename... Views>
Bytes concat(const Views&... parts) {
  Bytes out;
  (append(out, ByteView(parts)), ...);
  return out;
}

/// Address derived deterministically from a label, for fixtures and
/// simulated contracts that hold no key.
Address address_from_u64(std::uint64_t value) noexcept;

}  // namespace cr2
