#pragma once

#include "cr2/bytes.hpp"

namespace cr2 {

/// Original Keccak-256 (pad byte 0x01), as used by the EVM. Not FIPS SHA3-256.
Digest32 keccak(ByteView data) noexcept;

inline Digest32 keccak(const Digest32& a, const Digest32& b) noexcept {
  std::array<std::uint8_t, 64> buf;
  std::copy(a.bytes.begin(), a.bytes.end(), buf.begin());
  std::copy(b.bytes.begin(), b.bytes.end(), buf.begin() + 32);
  return keccak(ByteView(buf.data(), buf.size()));
}

inline Digest32 keccak(std::string_view text) noexcept {
  return keccak(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace cr2
