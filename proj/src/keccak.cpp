#include "cr2/keccak.hpp"

#include <cstring>

namespace cr2 {

namespace {

constexpr std::size_t kRate = 136;  // 1088-bit rate for 256-bit capacity * 2

constexpr std::uint64_t kRoundConstants[24] = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL, 0x8000000080008000ULL,
    0x000000000000808bULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
    0x000000000000008aULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
    0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800aULL, 0x800000008000000aULL,
    0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};

constexpr int kRotation[25] = {0,  1,  62, 28, 27, 36, 44, 6,  55, 20, 3,  10, 43,
                               25, 39, 41, 45, 15, 21, 8,  18, 2,  61, 56, 14};

constexpr std::uint64_t rotl(std::uint64_t x, int n) noexcept {
  return n == 0 ? x : (x << n) | (x >> (64 - n));
}

void keccak_f1600(std::uint64_t st[25]) noexcept {
  for (int round = 0; round < 24; ++round) {
    // theta
    std::uint64_t c[5];
    for (int x = 0; x < 5; ++x) c[x] = st[x] ^ st[x + 5] ^ st[x + 10] ^ st[x + 15] ^ st[x + 20];
    for (int x = 0; x < 5; ++x) {
      std::uint64_t d = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
      for (int y = 0; y < 25; y += 5) st[y + x] ^= d;
    }
    // rho + pi
    std::uint64_t b[25];
    for (int x = 0; x < 5; ++x)
      for (int y = 0; y < 5; ++y) b[y + 5 * ((2 * x + 3 * y) % 5)] = rotl(st[x + 5 * y], kRotation[x + 5 * y]);
    // chi
    for (int y = 0; y < 25; y += 5)
      for (int x = 0; x < 5; ++x) st[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5]);
    // iota
    st[0] ^= kRoundConstants[round];
  }
}

void absorb_block(std::uint64_t st[25], const std::uint8_t* block) noexcept {
  for (std::size_t i = 0; i < kRate / 8; ++i) {
    std::uint64_t lane = 0;
    for (int j = 7; j >= 0; --j) lane = (lane << 8) | block[8 * i + j];
    st[i] ^= lane;
  }
  keccak_f1600(st);
}

}  // namespace

Digest32 keccak(ByteView data) noexcept {
  std::uint64_t st[25] = {};
  std::size_t offset = 0;
  while (data.size() - offset >= kRate) {
    absorb_block(st, data.data() + offset);
    offset += kRate;
  }
  std::uint8_t last[kRate] = {};
  std::size_t tail = data.size() - offset;
  if (tail != 0) std::memcpy(last, data.data() + offset, tail);
  last[tail] ^= 0x01;
  last[kRate - 1] ^= 0x80;
  absorb_block(st, last);

  Digest32 out;
  for (std::size_t i = 0; i < 4; ++i)
    for (int j = 0; j < 8; ++j) out.bytes[8 * i + j] = static_cast<std::uint8_t>(st[i] >> (8 * j));
  return out;
}

}  // namespace cr2
