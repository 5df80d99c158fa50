#include "cr2/bytes.hpp"

#include "cr2/error.hpp"

#include <algorithm>

namespace cr2 {

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace


std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidSecretLength: return "InvalidSecretLength";
    case Errc::InvalidKey: return "InvalidKey";
    case Errc::MalleableSignature: return "MalleableSignature";
    case Errc::InvalidSignature: return "InvalidSignature";
    case Errc::TooFewLeaves: return "TooFewLeaves";
    case Errc::TooFewParticipants: return "TooFewParticipants";
    case Errc::AmbiguousOrder: return "AmbiguousOrder";
    case Errc::InsufficientDeposit: return "InsufficientDeposit";
    case Errc::InsufficientFee: return "InsufficientFee";
    case Errc::AlreadyActive: return "AlreadyActive";
    case Errc::ServiceHalted: return "ServiceHalted";
    case Errc::NotEnoughOperators: return "NotEnoughOperators";
    case Errc::NotLeader: return "NotLeader";
    case Errc::NotParticipant: return "NotParticipant";
    case Errc::UnknownRound: return "UnknownRound";
    case Errc::RootMismatch: return "RootMismatch";
    case Errc::SignatureInvalid: return "SignatureInvalid";
    case Errc::SignatureRequired: return "SignatureRequired";
    case Errc::Replayed: return "Replayed";
    case Errc::PhaseViolation: return "PhaseViolation";
    case Errc::WindowClosed: return "WindowClosed";
    case Errc::CommitmentMismatch: return "CommitmentMismatch";
    case Errc::NotYourTurn: return "NotYourTurn";
    case Errc::OrderInvalid: return "OrderInvalid";
    case Errc::TooEarly: return "TooEarly";
    case Errc::NotHalted: return "NotHalted";
    case Errc::NotYourRequest: return "NotYourRequest";
    case Errc::AlreadyProcessed: return "AlreadyProcessed";
    case Errc::AlreadyRefunded: return "AlreadyRefunded";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::LivenessTimeout: return "LivenessTimeout";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::NotEnoughPoints: return "NotEnoughPoints";
  }
  return "Unknown";
}

std::string to_hex(ByteView data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view text) {
  if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
  if (text.size() % 2 != 0) throw ProtocolError(Errc::InvalidArgument, "odd-length hex");
  Bytes out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(text[2 * i]);
    int lo = nibble(text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ProtocolError(Errc::InvalidArgument, "bad hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

template <std::size_t N, typename Tag>
std::string FixedBytes<N, Tag>::hex() const {
  return to_hex(view());
}

template <std::size_t N, typename Tag>
FixedBytes<N, Tag> FixedBytes<N, Tag>::from_hex(std::string_view text) {
  return from_view(cr2::from_hex(text));
}

template <std::size_t N, typename Tag>
FixedBytes<N, Tag> FixedBytes<N, Tag>::from_view(ByteView data) {
  if (data.size() != N)
    throw ProtocolError(Errc::InvalidArgument,
                        "expected " + std::to_string(N) + " bytes, got " + std::to_string(data.size()));
  FixedBytes out;
  std::copy(data.begin(), data.end(), out.bytes.begin());
  return out;
}

template struct FixedBytes<32, DigestTag>;
template struct FixedBytes<20, AddressTag>;

Digest32 word_from_u64(std::uint64_t value) noexcept {
  Digest32 w;
  for (int i = 0; i < 8; ++i) w.bytes[31 - i] = static_cast<std::uint8_t>(value >> (8 * i));
  return w;
}

Digest32 word_from_address(const Address& addr) noexcept {
  Digest32 w;
  std::copy(addr.bytes.begin(), addr.bytes.end(), w.bytes.begin() + 12);
  return w;
}

Address address_from_u64(std::uint64_t value) noexcept {
  Address a;
  for (int i = 0; i < 8; ++i) a.bytes[19 - i] = static_cast<std::uint8_t>(value >> (8 * i));
  return a;
}

}  // namespace cr2
