#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cr2 {

enum class Errc {
  // crypto
  InvalidSecretLength,
  InvalidKey,
  MalleableSignature,
  InvalidSignature,
  // merkle / beacon math
  TooFewLeaves,
  TooFewParticipants,
  AmbiguousOrder,
  // ledger
  InsufficientDeposit,
  InsufficientFee,
  AlreadyActive,
  ServiceHalted,
  NotEnoughOperators,
  NotLeader,
  NotParticipant,
  UnknownRound,
  RootMismatch,
  SignatureInvalid,
  SignatureRequired,
  Replayed,
  PhaseViolation,
  WindowClosed,
  CommitmentMismatch,
  NotYourTurn,
  OrderInvalid,
  TooEarly,
  NotHalted,
  NotYourRequest,
  AlreadyProcessed,
  AlreadyRefunded,
  InvalidArgument,
  // simulator / analysis
  LivenessTimeout,
  InvalidScenario,
  NotEnoughPoints,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure surfaced by the library. The code is the contract; the
/// message is for humans.
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(Errc code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                          : std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cr2
