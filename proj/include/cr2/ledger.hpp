#pragma once

#include "cr2/beacon_math.hpp"
#include "cr2/bytes.hpp"
#include "cr2/cost_meter.hpp"
#include "cr2/error.hpp"
#include "cr2/secp256k1.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cr2 {

using Tick = std::uint64_t;
using Funds = std::uint64_t;
using RoundId = std::uint64_t;

enum class Mode { Hybrid, OnChain };

enum class Phase {
  AwaitingRequest,
  Queued,
  OffChainInProgress,
  MerkleRootSubmitted,
  OnChainCvWindow,
  OnChainCoWindow,
  OnChainSWindow,
  Finalized,
  Halted,
  Refunded,
};

enum class HaltReason { None, LeaderFailure, TooFewOperators };

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(Phase phase) noexcept;
std::string_view to_string(HaltReason reason) noexcept;

/// Window lengths in logical ticks.
struct Timing {
  /// Off-chain collection allowance for c_v (before the root deadline) and
  /// for c_o (before the generate deadline).
  Tick off_chain_phase_timeout = 10;
  Tick merkle_root_submission_period = 10;
  Tick on_chain_submission_period = 10;
  Tick request_or_generate_period = 10;
  /// Per-participant allowance for the sequential off-chain secret reveal.
  Tick off_chain_reveal_slot = 3;
};

struct LedgerConfig {
  Mode mode = Mode::Hybrid;
  std::uint64_t chain_id = 1;
  Address ver_contract = address_from_u64(0xC0DE);
  std::string domain_name = "Commit Reveal2";
  std::string domain_version = "1";
  Address leader;
  Funds min_deposit = 1000;
  Funds min_fee = 1;
  Timing timing;
  /// Extra equal shares the leader receives when a participant is slashed.
  std::uint32_t leader_bonus_shares = 1;
  /// Fraction of the request fee (basis points) paid to the final revealer.
  std::uint32_t last_revealer_reward_bps = 0;
};

struct OperatorRecord {
  Address address;
  Funds deposit = 0;
  bool active = false;
  std::uint64_t activation_index = 0;
  /// Redistribution accumulator value at activation (or last settlement).
  Funds reward_debt = 0;
};

enum class SubmissionKind : std::uint8_t { Cv, Co, S };

/// Key of the append-only replay guard. The kind is part of the key because
/// the fully on-chain path accepts three submissions per operator per attempt.
struct SeenKey {
  SubmissionKind kind;
  Address address;
  RoundId round;
  std::uint64_t attempt;

  auto operator<=>(const SeenKey&) const = default;
};

struct RoundState {
  RoundId id = 0;
  Address consumer;
  Funds fee = 0;
  Phase phase = Phase::AwaitingRequest;
  std::uint64_t attempt_id = 0;
  /// Active operators in activation order when the attempt started.
  std::vector<Address> participants;
  Tick attempt_start = 0;
  /// Deadline of whatever is currently expected: the root, the leader's
  /// generate/request decision, an on-chain window, or the current turn.
  Tick deadline = 0;
  std::optional<Digest32> merkle_root;
  Tick root_submitted_at = 0;
  std::vector<std::optional<Digest32>> cv;
  std::vector<std::optional<Digest32>> co;
  std::vector<std::optional<Bytes32>> secret;
  /// Participants named in the open on-chain request.
  std::vector<bool> accused;
  std::optional<Digest32> omega_v;
  std::optional<RevealOrder> reveal_order;
  /// Position in reveal_order whose on-chain secret is due.
  std::size_t turn = 0;
  std::optional<Digest32> output;

  std::optional<std::size_t> participant_index(const Address& who) const;
  bool terminal() const noexcept { return phase == Phase::Finalized || phase == Phase::Refunded; }
};

/// One entry of the audit log: every call, accepted or reverted.
struct CallRecord {
  std::uint64_t seq = 0;
  Tick tick = 0;
  std::string name;
  Address caller;
  std::optional<RoundId> round;
  std::uint64_t attempt = 0;
  bool ok = false;
  std::optional<Errc> error;
  CostMeter delta;
};

/// Every internal account, for the conservation check.
struct FundSnapshot {
  Funds operator_deposits = 0;
  Funds leader_deposit = 0;
  Funds escrow = 0;
  Funds balances = 0;
  Funds pending_rewards = 0;
  Funds pool = 0;
  Funds external_inflow = 0;

  Funds total_internal() const noexcept {
    return operator_deposits + leader_deposit + escrow + balances + pending_rewards + pool;
  }
  bool conserved() const noexcept { return total_internal() == external_inflow; }
};

/// The verifying contract as a deterministic, single-owner state machine.
///
/// Calls are atomic: a call that throws ProtocolError leaves state and meter
/// untouched (it is still recorded in the log as reverted). Time is set by
/// the driver through set_time() and only moves forward.
class Ledger {
 public:
  /// Throws InsufficientDeposit if the leader's stake is below the minimum.
  Ledger(LedgerConfig config, Funds leader_deposit);

  void set_time(Tick now);
  Tick now() const noexcept { return now_; }

  // Registry and requests.
  std::uint64_t deposit_and_activate(const Address& caller, Funds amount);
  RoundId request_random_number(const Address& consumer, Funds fee);

  // Hybrid path, leader side.
  void submit_merkle_root(const Address& caller, RoundId round, const Digest32& root);
  Digest32 generate_random_number(const Address& caller, RoundId round, std::span<const Bytes32> secrets,
                                  std::span<const std::optional<RecoverableSignature>> signatures);
  void request_to_submit_cv(const Address& caller, RoundId round, std::span<const std::size_t> accused,
                            std::span<const std::optional<Digest32>> known_cvs,
                            std::span<const std::optional<RecoverableSignature>> signatures);
  void request_to_submit_co(const Address& caller, RoundId round, std::span<const std::size_t> accused,
                            std::span<const Digest32> cvs,
                            std::span<const std::optional<RecoverableSignature>> signatures);
  void request_to_submit_s(const Address& caller, RoundId round, std::span<const Digest32> cos,
                           std::span<const std::optional<RecoverableSignature>> signatures, const RevealOrder& order,
                           std::span<const std::optional<Bytes32>> known_secrets);

  // Operator submissions; on-chain mode and hybrid fallback windows.
  void submit_cv(const Address& caller, RoundId round, const Digest32& cv);
  void submit_co(const Address& caller, RoundId round, const Digest32& co);
  void submit_reveal_order(const Address& caller, RoundId round, const RevealOrder& order);
  /// Returns the output when this submission finalized the round.
  std::optional<Digest32> submit_s(const Address& caller, RoundId round, const Bytes32& secret);

  // Accountability.
  void fail_to_submit_cv(const Address& caller, RoundId round);
  void fail_to_submit_co(const Address& caller, RoundId round);
  void fail_to_submit_s(const Address& caller, RoundId round);
  void fail_to_request_s_or_generate_random_number(const Address& caller, RoundId round);
  void resume(const Address& caller, Funds replenish);
  Funds refund(const Address& consumer, RoundId round);

  // Views.
  const LedgerConfig& config() const noexcept { return config_; }
  bool halted() const noexcept { return halt_reason_ != HaltReason::None; }
  HaltReason halt_reason() const noexcept { return halt_reason_; }
  std::optional<RoundId> current_round() const noexcept { return current_; }
  const RoundState& round(RoundId id) const;
  std::size_t round_count() const noexcept { return rounds_.size(); }
  const OperatorRecord* find_operator(const Address& who) const;
  std::vector<Address> active_operators() const;
  std::size_t active_count() const noexcept;
  Funds leader_deposit() const noexcept { return leader_deposit_; }
  Funds deposit_of(const Address& who) const;
  /// Settled balance plus redistribution accrued but not yet settled.
  Funds balance_of(const Address& who) const;
  bool seen(const SeenKey& key) const { return seen_.contains(key); }
  std::size_t seen_size() const noexcept { return seen_.size(); }
  /// EIP-712 digest an operator signs for this deployment.
  Digest32 commit_digest(RoundId round, std::uint64_t attempt, const Digest32& cv) const;
  const CostMeter& meter() const noexcept { return meter_; }
  const std::vector<CallRecord>& log() const noexcept { return log_; }
  FundSnapshot funds() const;
  /// Debug export of the whole state as a JSON document.
  std::string snapshot_json() const;

 private:
  template <typename Fn>
  auto invoke(std::string_view name, const Address& caller, std::optional<RoundId> round, Fn&& body);

  RoundState& current_round_checked(RoundId id);
  std::size_t require_participant(const RoundState& r, const Address& who) const;
  void require_active_caller(const Address& who) const;
  void require_leader(const Address& who) const;
  void require_mode(Mode mode) const;
  void require_phase(const RoundState& r, Phase phase) const;
  void require_open(const RoundState& r) const;
  void require_expired(const RoundState& r) const;
  std::vector<std::size_t> checked_accused(const RoundState& r, std::span<const std::size_t> accused) const;

  Digest32 hash(ByteView data);
  Digest32 hash(const Digest32& a, const Digest32& b);
  bool check_commit_signature(const RoundState& r, std::size_t idx, const Digest32& cv,
                              const std::optional<RecoverableSignature>& sig);
  bool check_set(std::span<const Digest32> cvs, const Digest32& root);
  RevealOrder expected_order(const RoundState& r, std::span<const Digest32> cos, std::span<const Digest32> cvs);
  void mark_seen(SubmissionKind kind, const RoundState& r, std::size_t idx);
  bool is_seen(SubmissionKind kind, const RoundState& r, std::size_t idx) const;

  void start_attempt(RoundState& r);
  void finalize(RoundState& r, std::span<const Bytes32> secrets);
  void advance_queue();
  void slash_participants(RoundState& r, std::span<const std::size_t> offenders);
  void slash_leader();
  void halt(RoundState* r, HaltReason reason);
  void credit(const Address& who, Funds amount);
  void settle(OperatorRecord& op);
  void writes(std::uint64_t count) noexcept { delta_.storage_writes += count; }

  LedgerConfig config_;
  Digest32 domain_separator_;
  Tick now_ = 0;

  std::map<Address, OperatorRecord> operators_;
  std::uint64_t next_activation_index_ = 0;
  Funds leader_deposit_ = 0;
  std::map<Address, Funds> balances_;
  std::map<RoundId, Funds> escrow_;
  Funds acc_per_operator_ = 0;
  Funds pool_ = 0;
  Funds external_inflow_ = 0;

  std::vector<RoundState> rounds_;
  std::optional<RoundId> current_;
  HaltReason halt_reason_ = HaltReason::None;
  std::set<SeenKey> seen_;

  CostMeter meter_;
  CostMeter delta_;
  std::vector<CallRecord> log_;
};

}  // namespace cr2
