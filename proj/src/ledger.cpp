#include "cr2/ledger.hpp"

#include "cr2/keccak.hpp"
#include "cr2/merkle.hpp"
#include "cr2/typed_data.hpp"

#include "json.hpp"

#include <algorithm>
#include <type_traits>

namespace cr2 {

std::string_view to_string(Mode mode) noexcept {
  return mode == Mode::Hybrid ? "hybrid" : "onchain";
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::AwaitingRequest: return "AwaitingRequest";
    case Phase::Queued: return "Queued";
    case Phase::OffChainInProgress: return "OffChainInProgress";
    case Phase::MerkleRootSubmitted: return "MerkleRootSubmitted";
    case Phase::OnChainCvWindow: return "OnChainCvWindow";
    case Phase::OnChainCoWindow: return "OnChainCoWindow";
    case Phase::OnChainSWindow: return "OnChainSWindow";
    case Phase::Finalized: return "Finalized";
    case Phase::Halted: return "Halted";
    case Phase::Refunded: return "Refunded";
  }
  return "?";
}

std::string_view to_string(HaltReason reason) noexcept {
  switch (reason) {
    case HaltReason::None: return "none";
    case HaltReason::LeaderFailure: return "leader-failure";
    case HaltReason::TooFewOperators: return "too-few-operators";
  }
  return "?";
}

std::optional<std::size_t> RoundState::participant_index(const Address& who) const {
  auto it = std::find(participants.begin(), participants.end(), who);
  if (it == participants.end()) return std::nullopt;
  return static_cast<std::size_t>(it - participants.begin());
}

Ledger::Ledger(LedgerConfig config, Funds leader_deposit)
    : config_(std::move(config)),
      domain_separator_(domain_separator(config_.domain_name, config_.domain_version, config_.chain_id,
                                         config_.ver_contract)) {
  if (leader_deposit < config_.min_deposit)
    throw ProtocolError(Errc::InsufficientDeposit, "leader stake below minimum");
  leader_deposit_ = leader_deposit;
  external_inflow_ = leader_deposit;
}

void Ledger::set_time(Tick now) {
  if (now < now_) throw ProtocolError(Errc::InvalidArgument, "time moves forward only");
  now_ = now;
}

// Runs `body` as one transaction. Validation inside `body` must precede any
// mutation so that a throw leaves the state as it was; only the log grows.
template <typename Fn>
auto Ledger::invoke(std::string_view name, const Address& caller, std::optional<RoundId> round, Fn&& body) {
  CallRecord rec;
  rec.seq = log_.size();
  rec.tick = now_;
  rec.name = std::string(name);
  rec.caller = caller;
  rec.round = round;
  if (round && *round < rounds_.size()) rec.attempt = rounds_[*round].attempt_id;
  delta_ = CostMeter{};
  delta_.transactions = 1;
  auto commit = [&] {
    rec.ok = true;
    rec.delta = delta_;
    meter_ += delta_;
    log_.push_back(std::move(rec));
  };
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
      body();
      commit();
    } else {
      auto result = body();
      commit();
      return result;
    }
  } catch (const ProtocolError& e) {
    rec.error = e.code();
    log_.push_back(std::move(rec));
    throw;
  }
}

// ---- checks --------------------------------------------------------------

RoundState& Ledger::current_round_checked(RoundId id) {
  if (id >= rounds_.size()) throw ProtocolError(Errc::UnknownRound);
  if (halted()) throw ProtocolError(Errc::ServiceHalted);
  if (!current_ || *current_ != id) throw ProtocolError(Errc::PhaseViolation, "round is not in progress");
  return rounds_[id];
}

std::size_t Ledger::require_participant(const RoundState& r, const Address& who) const {
  auto idx = r.participant_index(who);
  if (!idx) throw ProtocolError(Errc::NotParticipant);
  return *idx;
}

void Ledger::require_active_caller(const Address& who) const {
  if (who == config_.leader) return;
  auto* op = find_operator(who);
  if (!op || !op->active) throw ProtocolError(Errc::NotParticipant);
}

void Ledger::require_leader(const Address& who) const {
  if (who != config_.leader) throw ProtocolError(Errc::NotLeader);
}

void Ledger::require_mode(Mode mode) const {
  if (config_.mode != mode) throw ProtocolError(Errc::PhaseViolation, "not available in this mode");
}

void Ledger::require_phase(const RoundState& r, Phase phase) const {
  if (r.phase != phase)
    throw ProtocolError(Errc::PhaseViolation, std::string("expected ") + std::string(to_string(phase)) + ", round is " +
                                                  std::string(to_string(r.phase)));
}

void Ledger::require_open(const RoundState& r) const {
  if (now_ > r.deadline) throw ProtocolError(Errc::WindowClosed);
}

void Ledger::require_expired(const RoundState& r) const {
  if (now_ <= r.deadline) throw ProtocolError(Errc::TooEarly);
}

std::vector<std::size_t> Ledger::checked_accused(const RoundState& r, std::span<const std::size_t> accused) const {
  if (accused.empty()) throw ProtocolError(Errc::InvalidArgument, "no operator accused");
  std::vector<std::size_t> out(accused.begin(), accused.end());
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end() || out.back() >= r.participants.size())
    throw ProtocolError(Errc::InvalidArgument, "accused indices");
  return out;
}

// ---- metered primitives ----------------------------------------------------

Digest32 Ledger::hash(ByteView data) {
  ++delta_.keccak_invocations;
  return keccak(data);
}

Digest32 Ledger::hash(const Digest32& a, const Digest32& b) {
  ++delta_.keccak_invocations;
  return keccak(a, b);
}

bool Ledger::check_commit_signature(const RoundState& r, std::size_t idx, const Digest32& cv,
                                    const std::optional<RecoverableSignature>& sig) {
  if (!sig) return false;
  ++delta_.signature_verifications;
  // struct hash, typed digest, and the address derivation inside ecrecover
  delta_.keccak_invocations += 3;
  return verify_signature(commit_digest(r.id, r.attempt_id, cv), *sig, r.participants[idx]);
}

bool Ledger::check_set(std::span<const Digest32> cvs, const Digest32& root) {
  delta_.merkle_leaves_hashed += cvs.size();
  delta_.keccak_invocations += merkle_hash_count(cvs.size());
  return verify_set(cvs, root);
}

RevealOrder Ledger::expected_order(const RoundState& r, std::span<const Digest32> cos, std::span<const Digest32> cvs) {
  Digest32 ov = r.omega_v ? *r.omega_v : (++delta_.keccak_invocations, omega_v(cos));
  delta_.keccak_invocations += cvs.size();
  try {
    return reveal_order(order_keys(ov, cvs));
  } catch (const ProtocolError& e) {
    throw ProtocolError(Errc::OrderInvalid, e.what());
  }
}

void Ledger::mark_seen(SubmissionKind kind, const RoundState& r, std::size_t idx) {
  seen_.insert(SeenKey{kind, r.participants[idx], r.id, r.attempt_id});
  writes(1);
}

bool Ledger::is_seen(SubmissionKind kind, const RoundState& r, std::size_t idx) const {
  return seen_.contains(SeenKey{kind, r.participants[idx], r.id, r.attempt_id});
}

Digest32 Ledger::commit_digest(RoundId round, std::uint64_t attempt, const Digest32& cv) const {
  return typed_digest(domain_separator_, message_struct_hash(round, attempt, cv));
}

// ---- state transitions (never throw) --------------------------------------

void Ledger::start_attempt(RoundState& r) {
  r.participants = active_operators();
  const std::size_t n = r.participants.size();
  r.cv.assign(n, std::nullopt);
  r.co.assign(n, std::nullopt);
  r.secret.assign(n, std::nullopt);
  r.accused.assign(n, false);
  r.merkle_root.reset();
  r.omega_v.reset();
  r.reveal_order.reset();
  r.turn = 0;
  r.attempt_start = now_;
  const auto& t = config_.timing;
  if (config_.mode == Mode::Hybrid) {
    r.phase = Phase::OffChainInProgress;
    r.deadline = now_ + t.off_chain_phase_timeout + t.merkle_root_submission_period;
  } else {
    r.phase = Phase::OnChainCvWindow;
    r.deadline = now_ + t.on_chain_submission_period;
  }
  current_ = r.id;
  writes(4);
}

void Ledger::finalize(RoundState& r, std::span<const Bytes32> secrets) {
  delta_.keccak_invocations += 1;
  r.output = omega_o(secrets);
  r.phase = Phase::Finalized;
  for (std::size_t i = 0; i < secrets.size(); ++i) r.secret[i] = secrets[i];

  Funds fee = escrow_[r.id];
  escrow_.erase(r.id);
  Funds reward = fee * config_.last_revealer_reward_bps / 10000;
  if (reward > 0 && r.reveal_order) credit(r.participants[r.reveal_order->last()], reward);
  else reward = 0;
  credit(config_.leader, fee - reward);
  writes(5);
  advance_queue();
}

void Ledger::advance_queue() {
  current_.reset();
  for (auto& r : rounds_) {
    if (r.phase == Phase::Queued) {
      start_attempt(r);
      return;
    }
  }
}

void Ledger::settle(OperatorRecord& op) {
  credit(op.address, acc_per_operator_ - op.reward_debt);
  op.reward_debt = acc_per_operator_;
}

void Ledger::credit(const Address& who, Funds amount) {
  if (amount == 0) return;
  balances_[who] += amount;
}

void Ledger::slash_participants(RoundState& r, std::span<const std::size_t> offenders) {
  Funds total = 0;
  for (auto idx : offenders) {
    auto& op = operators_.at(r.participants[idx]);
    if (!op.active) continue;
    settle(op);
    total += op.deposit;
    op.deposit = 0;
    op.active = false;
    writes(2);
  }
  const Funds m = active_count();
  const Funds shares = m + config_.leader_bonus_shares;
  Funds distributed = 0;
  if (shares > 0) {
    Funds per = total / shares;
    if (m > 0) acc_per_operator_ += per;
    credit(config_.leader, per * config_.leader_bonus_shares);
    distributed = per * shares;
  }
  pool_ += total - distributed;
  writes(3);

  if (active_count() < 2) {
    halt(&r, HaltReason::TooFewOperators);
  } else {
    ++r.attempt_id;
    start_attempt(r);
  }
}

void Ledger::slash_leader() {
  Funds total = leader_deposit_;
  leader_deposit_ = 0;
  const Funds m = active_count();
  Funds per = m > 0 ? total / m : 0;
  acc_per_operator_ += per;
  pool_ += total - per * m;
  writes(3);
}

void Ledger::halt(RoundState* r, HaltReason reason) {
  halt_reason_ = reason;
  if (r) r->phase = Phase::Halted;
  writes(2);
}

// ---- registry and requests -------------------------------------------------

std::uint64_t Ledger::deposit_and_activate(const Address& caller, Funds amount) {
  return invoke("depositAndActivate", caller, current_, [&] {
    if (caller == config_.leader) throw ProtocolError(Errc::InvalidArgument, "the leader is not an operator");
    auto it = operators_.find(caller);
    if (it != operators_.end() && it->second.active) throw ProtocolError(Errc::AlreadyActive);
    if (amount < config_.min_deposit) throw ProtocolError(Errc::InsufficientDeposit);

    auto& op = operators_[caller];
    op.address = caller;
    op.deposit += amount;
    op.active = true;
    op.activation_index = next_activation_index_++;
    op.reward_debt = acc_per_operator_;
    external_inflow_ += amount;
    writes(3);
    return op.activation_index;
  });
}

RoundId Ledger::request_random_number(const Address& consumer, Funds fee) {
  RoundId id = invoke("requestRandomNumber", consumer, std::nullopt, [&] {
    if (halted()) throw ProtocolError(Errc::ServiceHalted);
    if (active_count() < 2) throw ProtocolError(Errc::NotEnoughOperators);
    if (fee < config_.min_fee) throw ProtocolError(Errc::InsufficientFee);

    RoundState r;
    r.id = rounds_.size();
    r.consumer = consumer;
    r.fee = fee;
    r.phase = Phase::Queued;
    rounds_.push_back(std::move(r));
    escrow_[rounds_.back().id] = fee;
    external_inflow_ += fee;
    writes(3);
    if (!current_) start_attempt(rounds_.back());
    return rounds_.back().id;
  });
  log_.back().round = id;
  return id;
}

// ---- hybrid path: leader ---------------------------------------------------

void Ledger::submit_merkle_root(const Address& caller, RoundId round, const Digest32& root) {
  invoke("submitMerkleRoot", caller, round, [&] {
    require_leader(caller);
    require_mode(Mode::Hybrid);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OffChainInProgress);
    require_open(r);
    // After a c_v dispute every commitment is public, so the root is checkable now.
    if (std::all_of(r.cv.begin(), r.cv.end(), [](const auto& c) { return c.has_value(); })) {
      std::vector<Digest32> cvs;
      for (const auto& c : r.cv) cvs.push_back(*c);
      if (!check_set(cvs, root)) throw ProtocolError(Errc::RootMismatch);
    }

    const auto& t = config_.timing;
    r.merkle_root = root;
    r.root_submitted_at = now_;
    r.phase = Phase::MerkleRootSubmitted;
    r.deadline =
        now_ + t.off_chain_phase_timeout + r.participants.size() * t.off_chain_reveal_slot + t.request_or_generate_period;
    writes(3);
  });
}

Digest32 Ledger::generate_random_number(const Address& caller, RoundId round, std::span<const Bytes32> secrets,
                                        std::span<const std::optional<RecoverableSignature>> signatures) {
  return invoke("generateRandomNumber", caller, round, [&] {
    require_leader(caller);
    require_mode(Mode::Hybrid);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::MerkleRootSubmitted);
    require_open(r);
    const std::size_t n = r.participants.size();
    if (secrets.size() != n || signatures.size() != n)
      throw ProtocolError(Errc::InvalidArgument, "inputs must align with the round's participants");

    std::vector<Digest32> cos(n), cvs(n);
    for (std::size_t i = 0; i < n; ++i) {
      cos[i] = hash(secrets[i].view());
      cvs[i] = hash(cos[i].view());
    }
    if (!check_set(cvs, *r.merkle_root)) throw ProtocolError(Errc::RootMismatch);
    for (std::size_t i = 0; i < n; ++i) {
      if (is_seen(SubmissionKind::S, r, i)) throw ProtocolError(Errc::Replayed);
      if (r.cv[i]) continue;
      if (!signatures[i]) throw ProtocolError(Errc::SignatureRequired);
      if (!check_commit_signature(r, i, cvs[i], signatures[i])) throw ProtocolError(Errc::SignatureInvalid);
    }
    if (config_.last_revealer_reward_bps > 0) r.reveal_order = expected_order(r, cos, cvs);

    for (std::size_t i = 0; i < n; ++i) mark_seen(SubmissionKind::S, r, i);
    finalize(r, secrets);
    return *r.output;
  });
}

void Ledger::request_to_submit_cv(const Address& caller, RoundId round, std::span<const std::size_t> accused,
                                  std::span<const std::optional<Digest32>> known_cvs,
                                  std::span<const std::optional<RecoverableSignature>> signatures) {
  invoke("requestToSubmitCv", caller, round, [&] {
    require_leader(caller);
    require_mode(Mode::Hybrid);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OffChainInProgress);
    require_open(r);
    const std::size_t n = r.participants.size();
    auto named = checked_accused(r, accused);
    if (known_cvs.size() != n || signatures.size() != n)
      throw ProtocolError(Errc::InvalidArgument, "inputs must align with the round's participants");

    std::vector<bool> is_accused(n, false);
    for (auto i : named) {
      if (r.cv[i]) throw ProtocolError(Errc::InvalidArgument, "accused operator already committed on chain");
      is_accused[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (is_accused[i]) continue;
      if (r.cv[i]) {
        if (known_cvs[i] && *known_cvs[i] != *r.cv[i]) throw ProtocolError(Errc::CommitmentMismatch);
        continue;
      }
      if (!known_cvs[i] || !check_commit_signature(r, i, *known_cvs[i], signatures[i]))
        throw ProtocolError(Errc::SignatureRequired);
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (is_accused[i] || r.cv[i]) continue;
      r.cv[i] = *known_cvs[i];
      mark_seen(SubmissionKind::Cv, r, i);
    }
    r.accused = is_accused;
    r.phase = Phase::OnChainCvWindow;
    r.deadline = now_ + config_.timing.on_chain_submission_period;
    writes(named.size() + 2);
  });
}

void Ledger::request_to_submit_co(const Address& caller, RoundId round, std::span<const std::size_t> accused,
                                  std::span<const Digest32> cvs,
                                  std::span<const std::optional<RecoverableSignature>> signatures) {
  invoke("requestToSubmitCo", caller, round, [&] {
    require_leader(caller);
    require_mode(Mode::Hybrid);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::MerkleRootSubmitted);
    require_open(r);
    const std::size_t n = r.participants.size();
    auto named = checked_accused(r, accused);
    if (cvs.size() != n || signatures.size() != n)
      throw ProtocolError(Errc::InvalidArgument, "inputs must align with the round's participants");

    if (!check_set(cvs, *r.merkle_root)) throw ProtocolError(Errc::RootMismatch);
    for (std::size_t i = 0; i < n; ++i) {
      if (r.cv[i]) {
        if (*r.cv[i] != cvs[i]) throw ProtocolError(Errc::RootMismatch);
        continue;
      }
      if (!check_commit_signature(r, i, cvs[i], signatures[i])) throw ProtocolError(Errc::SignatureRequired);
    }
    for (auto i : named)
      if (r.co[i]) throw ProtocolError(Errc::InvalidArgument, "accused operator already revealed c_o on chain");

    for (std::size_t i = 0; i < n; ++i) {
      if (r.cv[i]) continue;
      r.cv[i] = cvs[i];
      mark_seen(SubmissionKind::Cv, r, i);
    }
    r.accused.assign(n, false);
    for (auto i : named) r.accused[i] = true;
    r.phase = Phase::OnChainCoWindow;
    r.deadline = now_ + config_.timing.on_chain_submission_period;
    writes(named.size() + 2);
  });
}

void Ledger::request_to_submit_s(const Address& caller, RoundId round, std::span<const Digest32> cos,
                                 std::span<const std::optional<RecoverableSignature>> signatures,
                                 const RevealOrder& order, std::span<const std::optional<Bytes32>> known_secrets) {
  invoke("requestToSubmitS", caller, round, [&] {
    require_leader(caller);
    require_mode(Mode::Hybrid);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::MerkleRootSubmitted);
    require_open(r);
    const std::size_t n = r.participants.size();
    if (cos.size() != n || signatures.size() != n || known_secrets.size() != n)
      throw ProtocolError(Errc::InvalidArgument, "inputs must align with the round's participants");

    std::vector<Digest32> cvs(n);
    for (std::size_t i = 0; i < n; ++i) {
      cvs[i] = hash(cos[i].view());
      if (r.co[i] && *r.co[i] != cos[i]) throw ProtocolError(Errc::CommitmentMismatch);
      if (r.cv[i] && *r.cv[i] != cvs[i]) throw ProtocolError(Errc::RootMismatch);
    }
    if (!check_set(cvs, *r.merkle_root)) throw ProtocolError(Errc::RootMismatch);
    for (std::size_t i = 0; i < n; ++i) {
      if (r.cv[i]) continue;
      if (!check_commit_signature(r, i, cvs[i], signatures[i])) throw ProtocolError(Errc::SignatureRequired);
    }
    RevealOrder expected = expected_order(r, cos, cvs);
    if (order != expected || !verify_order(order)) throw ProtocolError(Errc::OrderInvalid);

    std::size_t missing = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!known_secrets[i]) {
        ++missing;
        continue;
      }
      if (hash(known_secrets[i]->view()) != cos[i]) throw ProtocolError(Errc::CommitmentMismatch);
    }
    if (missing == 0) throw ProtocolError(Errc::InvalidArgument, "every secret is known; generate instead");

    r.omega_v = omega_v(cos);
    for (std::size_t i = 0; i < n; ++i) {
      r.co[i] = cos[i];
      r.accused[i] = !known_secrets[i];
      if (known_secrets[i]) {
        r.secret[i] = *known_secrets[i];
        mark_seen(SubmissionKind::S, r, i);
      }
    }
    r.reveal_order = std::move(expected);
    r.turn = 0;
    while (!r.accused[r.reveal_order->permutation[r.turn]]) ++r.turn;
    r.phase = Phase::OnChainSWindow;
    r.deadline = now_ + config_.timing.on_chain_submission_period;
    writes(2 * n + 3);
  });
}

// ---- operator submissions --------------------------------------------------

void Ledger::submit_cv(const Address& caller, RoundId round, const Digest32& cv) {
  invoke("submitCv", caller, round, [&] {
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OnChainCvWindow);
    auto idx = require_participant(r, caller);
    if (is_seen(SubmissionKind::Cv, r, idx)) throw ProtocolError(Errc::Replayed);
    if (config_.mode == Mode::Hybrid && !r.accused[idx])
      throw ProtocolError(Errc::NotParticipant, "not named in the pending request");
    require_open(r);

    r.cv[idx] = cv;
    mark_seen(SubmissionKind::Cv, r, idx);
    writes(1);

    const std::size_t n = r.participants.size();
    bool done = true;
    for (std::size_t i = 0; i < n; ++i) done = done && r.cv[i].has_value();
    if (!done) return;
    if (config_.mode == Mode::Hybrid) {
      r.accused.assign(n, false);
      r.phase = Phase::OffChainInProgress;
      r.deadline = now_ + config_.timing.merkle_root_submission_period;
    } else {
      r.phase = Phase::OnChainCoWindow;
      r.deadline = now_ + config_.timing.on_chain_submission_period;
    }
    writes(2);
  });
}

void Ledger::submit_co(const Address& caller, RoundId round, const Digest32& co) {
  invoke("submitCo", caller, round, [&] {
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OnChainCoWindow);
    auto idx = require_participant(r, caller);
    if (is_seen(SubmissionKind::Co, r, idx)) throw ProtocolError(Errc::Replayed);
    if (config_.mode == Mode::Hybrid && !r.accused[idx])
      throw ProtocolError(Errc::NotParticipant, "not named in the pending request");
    require_open(r);
    if (hash(co.view()) != *r.cv[idx]) throw ProtocolError(Errc::CommitmentMismatch);

    r.co[idx] = co;
    mark_seen(SubmissionKind::Co, r, idx);
    writes(1);

    const std::size_t n = r.participants.size();
    if (config_.mode == Mode::Hybrid) {
      for (std::size_t i = 0; i < n; ++i)
        if (r.accused[i] && !r.co[i]) return;
      const auto& t = config_.timing;
      r.accused.assign(n, false);
      r.phase = Phase::MerkleRootSubmitted;
      r.deadline = now_ + n * t.off_chain_reveal_slot + t.request_or_generate_period;
    } else {
      std::vector<Digest32> cos;
      for (const auto& c : r.co) {
        if (!c) return;
        cos.push_back(*c);
      }
      ++delta_.keccak_invocations;
      r.omega_v = omega_v(cos);
      r.phase = Phase::OnChainSWindow;
      r.turn = 0;
      r.deadline = now_ + config_.timing.on_chain_submission_period;
    }
    writes(3);
  });
}

void Ledger::submit_reveal_order(const Address& caller, RoundId round, const RevealOrder& order) {
  invoke("submitRevealOrder", caller, round, [&] {
    require_mode(Mode::OnChain);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OnChainSWindow);
    if (r.reveal_order) throw ProtocolError(Errc::PhaseViolation, "order already set");
    require_participant(r, caller);
    require_open(r);

    std::vector<Digest32> cos, cvs;
    for (std::size_t i = 0; i < r.participants.size(); ++i) {
      cos.push_back(*r.co[i]);
      cvs.push_back(*r.cv[i]);
    }
    RevealOrder expected = expected_order(r, cos, cvs);
    if (order != expected || !verify_order(order)) throw ProtocolError(Errc::OrderInvalid);

    r.reveal_order = std::move(expected);
    r.deadline = now_ + config_.timing.on_chain_submission_period;
    writes(r.participants.size() + 1);
  });
}

std::optional<Digest32> Ledger::submit_s(const Address& caller, RoundId round, const Bytes32& secret) {
  return invoke("submitS", caller, round, [&]() -> std::optional<Digest32> {
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OnChainSWindow);
    auto idx = require_participant(r, caller);
    if (is_seen(SubmissionKind::S, r, idx)) throw ProtocolError(Errc::Replayed);
    if (!r.reveal_order) throw ProtocolError(Errc::PhaseViolation, "reveal order not yet submitted");
    if (config_.mode == Mode::Hybrid && !r.accused[idx])
      throw ProtocolError(Errc::NotParticipant, "not named in the pending request");
    if (r.reveal_order->permutation[r.turn] != idx) throw ProtocolError(Errc::NotYourTurn);
    require_open(r);
    if (hash(secret.view()) != *r.co[idx]) throw ProtocolError(Errc::CommitmentMismatch);

    r.secret[idx] = secret;
    mark_seen(SubmissionKind::S, r, idx);
    writes(1);

    const auto& perm = r.reveal_order->permutation;
    std::size_t next = r.turn + 1;
    while (next < perm.size() && r.secret[perm[next]]) ++next;
    if (next < perm.size()) {
      r.turn = next;
      r.deadline = now_ + config_.timing.on_chain_submission_period;
      writes(2);
      return std::nullopt;
    }
    std::vector<Bytes32> secrets;
    for (const auto& s : r.secret) secrets.push_back(*s);
    finalize(r, secrets);
    return r.output;
  });
}

// ---- accountability ----------------------------------------------------------

void Ledger::fail_to_submit_cv(const Address& caller, RoundId round) {
  invoke("failToSubmitCv", caller, round, [&] {
    require_active_caller(caller);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OnChainCvWindow);
    require_expired(r);
    std::vector<std::size_t> offenders;
    for (std::size_t i = 0; i < r.participants.size(); ++i)
      if (!r.cv[i] && (config_.mode == Mode::OnChain || r.accused[i])) offenders.push_back(i);
    slash_participants(r, offenders);
  });
}

void Ledger::fail_to_submit_co(const Address& caller, RoundId round) {
  invoke("failToSubmitCo", caller, round, [&] {
    require_active_caller(caller);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OnChainCoWindow);
    require_expired(r);
    std::vector<std::size_t> offenders;
    for (std::size_t i = 0; i < r.participants.size(); ++i)
      if (!r.co[i] && (config_.mode == Mode::OnChain || r.accused[i])) offenders.push_back(i);
    slash_participants(r, offenders);
  });
}

void Ledger::fail_to_submit_s(const Address& caller, RoundId round) {
  invoke("failToSubmitS", caller, round, [&] {
    require_active_caller(caller);
    auto& r = current_round_checked(round);
    require_phase(r, Phase::OnChainSWindow);
    require_expired(r);
    std::size_t offender;
    if (r.reveal_order) {
      offender = r.reveal_order->permutation[r.turn];
    } else {
      // Nobody published the order; the first revealer owed it.
      std::vector<Digest32> cos, cvs;
      for (std::size_t i = 0; i < r.participants.size(); ++i) {
        cos.push_back(*r.co[i]);
        cvs.push_back(*r.cv[i]);
      }
      offender = expected_order(r, cos, cvs).permutation.front();
    }
    std::array<std::size_t, 1> offenders{offender};
    slash_participants(r, offenders);
  });
}

void Ledger::fail_to_request_s_or_generate_random_number(const Address& caller, RoundId round) {
  invoke("failToRequestSOrGenerateRandomNumber", caller, round, [&] {
    auto* op = find_operator(caller);
    if (!op || !op->active) throw ProtocolError(Errc::NotParticipant);
    require_mode(Mode::Hybrid);
    auto& r = current_round_checked(round);
    if (r.phase != Phase::OffChainInProgress && r.phase != Phase::MerkleRootSubmitted)
      throw ProtocolError(Errc::PhaseViolation, "no leader deadline pending");
    require_expired(r);
    slash_leader();
    halt(&r, HaltReason::LeaderFailure);
  });
}

void Ledger::resume(const Address& caller, Funds replenish) {
  invoke("resume", caller, current_, [&] {
    require_leader(caller);
    if (!halted()) throw ProtocolError(Errc::NotHalted);
    if (leader_deposit_ + replenish < config_.min_deposit) throw ProtocolError(Errc::InsufficientDeposit);
    if (active_count() < 2) throw ProtocolError(Errc::NotEnoughOperators);

    leader_deposit_ += replenish;
    external_inflow_ += replenish;
    halt_reason_ = HaltReason::None;
    writes(2);
    if (current_ && rounds_[*current_].phase == Phase::Halted) {
      auto& r = rounds_[*current_];
      ++r.attempt_id;
      start_attempt(r);
    } else {
      advance_queue();
    }
  });
}

Funds Ledger::refund(const Address& consumer, RoundId round) {
  return invoke("refund", consumer, round, [&] {
    if (round >= rounds_.size()) throw ProtocolError(Errc::UnknownRound);
    auto& r = rounds_[round];
    if (r.consumer != consumer) throw ProtocolError(Errc::NotYourRequest);
    if (r.phase == Phase::Finalized) throw ProtocolError(Errc::AlreadyProcessed);
    if (r.phase == Phase::Refunded) throw ProtocolError(Errc::AlreadyRefunded);
    if (!halted()) throw ProtocolError(Errc::NotHalted);

    Funds fee = escrow_[round];
    escrow_.erase(round);
    credit(consumer, fee);
    r.phase = Phase::Refunded;
    writes(3);
    return fee;
  });
}

// ---- views -----------------------------------------------------------------

const RoundState& Ledger::round(RoundId id) const {
  if (id >= rounds_.size()) throw ProtocolError(Errc::UnknownRound);
  return rounds_[id];
}

const OperatorRecord* Ledger::find_operator(const Address& who) const {
  auto it = operators_.find(who);
  return it == operators_.end() ? nullptr : &it->second;
}

std::vector<Address> Ledger::active_operators() const {
  std::vector<const OperatorRecord*> active;
  for (const auto& [addr, op] : operators_)
    if (op.active) active.push_back(&op);
  std::sort(active.begin(), active.end(),
            [](const auto* a, const auto* b) { return a->activation_index < b->activation_index; });
  std::vector<Address> out;
  for (const auto* op : active) out.push_back(op->address);
  return out;
}

std::size_t Ledger::active_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(operators_.begin(), operators_.end(), [](const auto& kv) { return kv.second.active; }));
}

Funds Ledger::deposit_of(const Address& who) const {
  auto* op = find_operator(who);
  return op ? op->deposit : 0;
}

Funds Ledger::balance_of(const Address& who) const {
  auto it = balances_.find(who);
  Funds b = it == balances_.end() ? 0 : it->second;
  if (auto* op = find_operator(who); op && op->active) b += acc_per_operator_ - op->reward_debt;
  return b;
}

FundSnapshot Ledger::funds() const {
  FundSnapshot f;
  for (const auto& [addr, op] : operators_) {
    f.operator_deposits += op.deposit;
    if (op.active) f.pending_rewards += acc_per_operator_ - op.reward_debt;
  }
  f.leader_deposit = leader_deposit_;
  for (const auto& [id, amount] : escrow_) f.escrow += amount;
  for (const auto& [addr, amount] : balances_) f.balances += amount;
  f.pool = pool_;
  f.external_inflow = external_inflow_;
  return f;
}

std::string Ledger::snapshot_json() const {
  using nlohmann::json;
  auto opt_hex = [](const auto& v) { return v ? json(v->hex()) : json(nullptr); };

  json ops = json::array();
  for (const auto& [addr, op] : operators_) {
    ops.push_back({{"address", addr.hex()},
                   {"deposit", op.deposit},
                   {"active", op.active},
                   {"activationIndex", op.activation_index},
                   {"balance", balance_of(addr)}});
  }
  json rounds = json::array();
  for (const auto& r : rounds_) {
    json parts = json::array();
    for (std::size_t i = 0; i < r.participants.size(); ++i) {
      parts.push_back({{"address", r.participants[i].hex()},
                       {"cv", opt_hex(r.cv[i])},
                       {"co", opt_hex(r.co[i])},
                       {"s", opt_hex(r.secret[i])},
                       {"accused", static_cast<bool>(r.accused[i])}});
    }
    json order = nullptr;
    if (r.reveal_order) order = r.reveal_order->permutation;
    rounds.push_back({{"round", r.id},
                      {"attemptId", r.attempt_id},
                      {"phase", to_string(r.phase)},
                      {"consumer", r.consumer.hex()},
                      {"fee", r.fee},
                      {"deadline", r.deadline},
                      {"merkleRoot", opt_hex(r.merkle_root)},
                      {"omegaV", opt_hex(r.omega_v)},
                      {"revealOrder", order},
                      {"output", opt_hex(r.output)},
                      {"participants", parts}});
  }
  auto f = funds();
  json doc = {
      {"mode", to_string(config_.mode)},
      {"tick", now_},
      {"halted", to_string(halt_reason_)},
      {"leader", {{"address", config_.leader.hex()}, {"deposit", leader_deposit_}, {"balance", balance_of(config_.leader)}}},
      {"operators", ops},
      {"rounds", rounds},
      {"seenEntries", seen_.size()},
      {"funds",
       {{"operatorDeposits", f.operator_deposits},
        {"leaderDeposit", f.leader_deposit},
        {"escrow", f.escrow},
        {"balances", f.balances},
        {"pendingRewards", f.pending_rewards},
        {"pool", f.pool},
        {"externalInflow", f.external_inflow}}},
      {"meter",
       {{"transactions", meter_.transactions},
        {"signatureVerifications", meter_.signature_verifications},
        {"keccakInvocations", meter_.keccak_invocations},
        {"storageWrites", meter_.storage_writes},
        {"merkleLeavesHashed", meter_.merkle_leaves_hashed}}},
  };
  return doc.dump(2);
}

}  // namespace cr2
