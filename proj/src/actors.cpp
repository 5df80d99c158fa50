#include "cr2/actors.hpp"

#include "cr2/keccak.hpp"
#include "cr2/merkle.hpp"

#include <algorithm>
#include <array>

namespace cr2 {

namespace {

constexpr std::array<std::pair<OperatorPolicy, std::string_view>, 6> kOperatorPolicyNames = {{
    {OperatorPolicy::Honest, "honest"},
    {OperatorPolicy::WithholdCvOffChain, "withhold-cv"},
    {OperatorPolicy::WithholdCoOffChain, "withhold-co"},
    {OperatorPolicy::WithholdSOffChain, "withhold-s"},
    {OperatorPolicy::NeverSubmitOnChain, "never-submit-onchain"},
    {OperatorPolicy::LateOnChainGriefer, "late-onchain-griefer"},
}};

constexpr std::array<std::pair<LeaderPolicy, std::string_view>, 4> kLeaderPolicyNames = {{
    {LeaderPolicy::Honest, "honest"},
    {LeaderPolicy::WithholdMerkleRoot, "withhold-merkle-root"},
    {LeaderPolicy::WithholdGenerate, "withhold-generate"},
    {LeaderPolicy::SubmitWrongRoot, "submit-wrong-root"},
}};

template <typename Table, typename Key>
std::string_view name_of(const Table& table, Key key) {
  for (const auto& [k, name] : table)
    if (k == key) return name;
  return "?";
}

template <typename Table>
auto parse_name(const Table& table, std::string_view name, std::string_view what) {
  for (const auto& [k, n] : table)
    if (n == name) return k;
  throw ProtocolError(Errc::InvalidScenario, "unknown " + std::string(what) + " policy '" + std::string(name) + "'");
}

template <typename T>
bool all_present(const std::vector<std::optional<T>>& v) {
  return std::all_of(v.begin(), v.end(), [](const auto& x) { return x.has_value(); });
}

template <typename T>
std::vector<T> unwrap(const std::vector<std::optional<T>>& v) {
  std::vector<T> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(*x);
  return out;
}

}  // namespace

std::string_view to_string(OperatorPolicy p) noexcept { return name_of(kOperatorPolicyNames, p); }
std::string_view to_string(LeaderPolicy p) noexcept { return name_of(kLeaderPolicyNames, p); }
OperatorPolicy parse_operator_policy(std::string_view name) { return parse_name(kOperatorPolicyNames, name, "operator"); }
LeaderPolicy parse_leader_policy(std::string_view name) { return parse_name(kLeaderPolicyNames, name, "leader"); }

std::string_view to_string(MessageKind k) noexcept {
  switch (k) {
    case MessageKind::CommitCv: return "CommitCv";
    case MessageKind::RevealCo: return "RevealCo";
    case MessageKind::RevealS: return "RevealS";
    case MessageKind::OrderAnnouncement: return "OrderAnnouncement";
  }
  return "?";
}

// ---- operator --------------------------------------------------------------

OperatorActor::OperatorActor(SigningKey key, OperatorPolicy policy, std::uint64_t seed, std::size_t index,
                             bool standby, Funds deposit)
    : key_(std::move(key)), policy_(policy), standby_(standby), deposit_(deposit) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x0C2u};
  rng_.seed(seq);
}

void OperatorActor::activate(Ledger& ledger) {
  joined_ = try_call([&] { ledger.deposit_and_activate(address(), deposit_); });
}

OperatorActor::Attempt& OperatorActor::attempt_for(const RoundState& r) {
  if (!current_ || current_->round != r.id || current_->attempt != r.attempt_id) {
    Bytes32 secret;
    for (std::size_t i = 0; i < 32; i += 8) {
      auto word = rng_();
      for (std::size_t j = 0; j < 8; ++j) secret.bytes[i + j] = static_cast<std::uint8_t>(word >> (56 - 8 * j));
    }
    current_ = Attempt{r.id, r.attempt_id, derive_chain(secret)};
  }
  return *current_;
}

bool OperatorActor::off_chain_cv() const noexcept {
  return policy_ != OperatorPolicy::WithholdCvOffChain && policy_ != OperatorPolicy::NeverSubmitOnChain;
}

bool OperatorActor::off_chain_co() const noexcept {
  return policy_ != OperatorPolicy::WithholdCoOffChain && policy_ != OperatorPolicy::NeverSubmitOnChain;
}

bool OperatorActor::off_chain_s() const noexcept {
  return policy_ == OperatorPolicy::Honest || policy_ == OperatorPolicy::WithholdCvOffChain ||
         policy_ == OperatorPolicy::WithholdCoOffChain;
}

bool OperatorActor::answers_window(Phase window) const noexcept {
  switch (policy_) {
    case OperatorPolicy::Honest:
    case OperatorPolicy::LateOnChainGriefer: return true;
    case OperatorPolicy::NeverSubmitOnChain: return false;
    case OperatorPolicy::WithholdCvOffChain: return window != Phase::OnChainCvWindow;
    case OperatorPolicy::WithholdCoOffChain: return window != Phase::OnChainCoWindow;
    case OperatorPolicy::WithholdSOffChain: return window != Phase::OnChainSWindow;
  }
  return false;
}

void OperatorActor::step(ActorContext& ctx) {
  auto& ledger = ctx.ledger;
  if (!joined_) {
    if (standby_ && ledger.halt_reason() == HaltReason::TooFewOperators && ledger.active_count() < 2)
      activate(ledger);
    inbox_.clear();
    return;
  }
  const auto* rec = ledger.find_operator(address());
  auto cur = ledger.current_round();
  if (!rec || !rec->active || !cur || ledger.halted()) {
    inbox_.clear();
    return;
  }
  {
    const auto& r = ledger.round(*cur);
    if (auto idx = r.participant_index(address())) {
      if (ledger.config().mode == Mode::Hybrid)
        step_hybrid(ctx, r, *idx);
      else
        step_onchain(ctx, r, *idx);
    }
  }
  inbox_.clear();
  if (ledger.current_round() == cur && !ledger.halted()) trigger_failures(ctx, ledger.round(*cur));
}

void OperatorActor::step_hybrid(ActorContext& ctx, const RoundState& r, std::size_t idx) {
  auto& ledger = ctx.ledger;
  auto& a = attempt_for(r);
  auto send = [&](MessageKind kind, const Digest32& payload, std::optional<RecoverableSignature> sig = {}) {
    ctx.send(OffChainMessage{kind, address(), ledger.config().leader, r.id, r.attempt_id, payload, sig});
  };

  switch (r.phase) {
    case Phase::OffChainInProgress:
      if (!a.sent_cv && !r.cv[idx] && off_chain_cv()) {
        send(MessageKind::CommitCv, a.chain.outer, sign(ledger.commit_digest(r.id, r.attempt_id, a.chain.outer), key_));
        a.sent_cv = true;
      }
      break;
    case Phase::MerkleRootSubmitted:
      if ((a.sent_cv || r.cv[idx]) && !a.sent_co && !r.co[idx] && off_chain_co()) {
        send(MessageKind::RevealCo, a.chain.inner);
        a.sent_co = true;
      }
      break;
    case Phase::OnChainCvWindow:
      if (r.accused[idx] && !r.cv[idx] && answers_window(r.phase) && (!waits_for_deadline() || ctx.now() == r.deadline))
        try_call([&] { ledger.submit_cv(address(), r.id, a.chain.outer); });
      break;
    case Phase::OnChainCoWindow:
      if (r.accused[idx] && !r.co[idx] && answers_window(r.phase) && (!waits_for_deadline() || ctx.now() == r.deadline))
        try_call([&] { ledger.submit_co(address(), r.id, a.chain.inner); });
      break;
    case Phase::OnChainSWindow:
      submit_s(ctx, r, idx);
      break;
    default:
      break;
  }

  for (const auto& msg : inbox_) {
    if (msg.kind != MessageKind::OrderAnnouncement || msg.round != r.id || msg.attempt != r.attempt_id) continue;
    if (a.sent_s || !off_chain_s()) continue;
    send(MessageKind::RevealS, a.chain.secret);
    a.sent_s = true;
    ++offchain_s_;
  }
}

void OperatorActor::step_onchain(ActorContext& ctx, const RoundState& r, std::size_t idx) {
  auto& ledger = ctx.ledger;
  auto& a = attempt_for(r);
  bool on_time = !waits_for_deadline() || ctx.now() == r.deadline;
  switch (r.phase) {
    case Phase::OnChainCvWindow:
      if (!r.cv[idx] && answers_window(r.phase) && on_time)
        try_call([&] { ledger.submit_cv(address(), r.id, a.chain.outer); });
      break;
    case Phase::OnChainCoWindow:
      if (!r.co[idx] && answers_window(r.phase) && on_time)
        try_call([&] { ledger.submit_co(address(), r.id, a.chain.inner); });
      break;
    case Phase::OnChainSWindow:
      if (!r.reveal_order && answers_window(r.phase) && on_time) {
        auto order = reveal_order(order_keys(*r.omega_v, unwrap(r.cv)));
        if (order.permutation.front() == idx) try_call([&] { ledger.submit_reveal_order(address(), r.id, order); });
      }
      submit_s(ctx, ledger.round(r.id), idx);
      break;
    default:
      break;
  }
}

void OperatorActor::submit_s(ActorContext& ctx, const RoundState& r, std::size_t idx) {
  if (r.phase != Phase::OnChainSWindow || !r.reveal_order || r.secret[idx]) return;
  if (ctx.ledger.config().mode == Mode::Hybrid && !r.accused[idx]) return;
  if (r.reveal_order->permutation[r.turn] != idx || !answers_window(r.phase)) return;
  if (waits_for_deadline() && ctx.now() != r.deadline) return;
  auto& a = attempt_for(r);
  if (try_call([&] { ctx.ledger.submit_s(address(), r.id, a.chain.secret); })) ++onchain_s_;
}

void OperatorActor::trigger_failures(ActorContext& ctx, const RoundState& r) {
  if (policy_ != OperatorPolicy::Honest || ctx.now() <= r.deadline) return;
  auto& ledger = ctx.ledger;
  switch (r.phase) {
    case Phase::OnChainCvWindow: try_call([&] { ledger.fail_to_submit_cv(address(), r.id); }); break;
    case Phase::OnChainCoWindow: try_call([&] { ledger.fail_to_submit_co(address(), r.id); }); break;
    case Phase::OnChainSWindow: try_call([&] { ledger.fail_to_submit_s(address(), r.id); }); break;
    case Phase::OffChainInProgress:
    case Phase::MerkleRootSubmitted:
      try_call([&] { ledger.fail_to_request_s_or_generate_random_number(address(), r.id); });
      break;
    default:
      break;
  }
}

// ---- leader ----------------------------------------------------------------

LeaderActor::LeaderActor(Address address, LeaderOptions options) : address_(address), options_(options) {}

LeaderActor::Collection& LeaderActor::collection_for(const RoundState& r) {
  if (!current_ || current_->round != r.id || current_->attempt != r.attempt_id) {
    const std::size_t n = r.participants.size();
    Collection c;
    c.round = r.id;
    c.attempt = r.attempt_id;
    c.cv.resize(n);
    c.sig.resize(n);
    c.co.resize(n);
    c.secret.resize(n);
    if (options_.policy != LeaderPolicy::Honest && faults_used_ < options_.fault_count) {
      c.faulty = true;
      ++faults_used_;
    }
    current_ = std::move(c);
  }
  return *current_;
}

void LeaderActor::absorb(const Ledger& ledger, const RoundState& r, Collection& c) {
  for (const auto& msg : inbox_) {
    if (msg.round != r.id || msg.attempt != r.attempt_id) continue;
    auto idx = r.participant_index(msg.sender);
    if (!idx) continue;
    const std::size_t i = *idx;
    switch (msg.kind) {
      case MessageKind::CommitCv:
        if (!c.cv[i] && msg.signature &&
            verify_signature(ledger.commit_digest(r.id, r.attempt_id, msg.payload), *msg.signature, msg.sender)) {
          c.cv[i] = msg.payload;
          c.sig[i] = msg.signature;
        }
        break;
      case MessageKind::RevealCo: {
        auto cv = c.cv[i] ? c.cv[i] : r.cv[i];
        if (!c.co[i] && cv && keccak(msg.payload.view()) == *cv) c.co[i] = msg.payload;
        break;
      }
      case MessageKind::RevealS: {
        auto co = c.co[i] ? c.co[i] : r.co[i];
        if (!c.secret[i] && co && keccak(msg.payload.view()) == *co) c.secret[i] = msg.payload;
        break;
      }
      case MessageKind::OrderAnnouncement:
        break;
    }
  }
  for (std::size_t i = 0; i < r.participants.size(); ++i) {
    if (!c.cv[i] && r.cv[i]) c.cv[i] = r.cv[i];
    if (!c.co[i] && r.co[i]) c.co[i] = r.co[i];
  }
}

void LeaderActor::step(ActorContext& ctx) {
  auto& ledger = ctx.ledger;
  if (ledger.halted()) {
    maybe_resume(ctx);
    inbox_.clear();
    return;
  }
  halted_since_.reset();
  auto cur = ledger.current_round();
  if (!cur || ledger.config().mode != Mode::Hybrid) {
    inbox_.clear();
    return;
  }
  const auto& r = ledger.round(*cur);
  auto& c = collection_for(r);
  absorb(ledger, r, c);
  inbox_.clear();
  if (c.finished) return;
  if (r.phase == Phase::OffChainInProgress)
    collect_phase(ctx, r, c);
  else if (r.phase == Phase::MerkleRootSubmitted)
    reveal_phase(ctx, r, c);
}

void LeaderActor::collect_phase(ActorContext& ctx, const RoundState& r, Collection& c) {
  auto& ledger = ctx.ledger;
  const bool withholding = c.faulty && options_.policy == LeaderPolicy::WithholdMerkleRoot;
  if (withholding) return;
  if (all_present(c.cv)) {
    auto root = merkle_root(unwrap(c.cv));
    if (c.faulty && options_.policy == LeaderPolicy::SubmitWrongRoot) root.bytes[31] ^= 0x01;
    c.root_sent = try_call([&] { ledger.submit_merkle_root(address_, r.id, root); });
    return;
  }
  if (c.requested_cv || ctx.now() < r.attempt_start + ledger.config().timing.off_chain_phase_timeout) return;
  std::vector<std::size_t> accused;
  for (std::size_t i = 0; i < c.cv.size(); ++i)
    if (!c.cv[i]) accused.push_back(i);
  c.requested_cv = try_call([&] { ledger.request_to_submit_cv(address_, r.id, accused, c.cv, c.sig); });
}

void LeaderActor::prompt(ActorContext& ctx, const RoundState& r, Collection& c) {
  auto idx = c.order->permutation[c.turn];
  ctx.send(OffChainMessage{MessageKind::OrderAnnouncement, address_, r.participants[idx], r.id, r.attempt_id,
                           c.order->keys[c.turn], std::nullopt});
  c.turn_deadline = ctx.now() + 2 * options_.latency + 1;
}

void LeaderActor::reveal_phase(ActorContext& ctx, const RoundState& r, Collection& c) {
  auto& ledger = ctx.ledger;
  if (c.faulty && options_.policy == LeaderPolicy::WithholdGenerate) return;
  const std::size_t n = r.participants.size();

  if (!all_present(c.co)) {
    if (c.requested_co || ctx.now() < r.root_submitted_at + ledger.config().timing.off_chain_phase_timeout) return;
    std::vector<std::size_t> accused;
    for (std::size_t i = 0; i < n; ++i)
      if (!c.co[i]) accused.push_back(i);
    auto cvs = unwrap(c.cv);
    c.requested_co = try_call([&] { ledger.request_to_submit_co(address_, r.id, accused, cvs, c.sig); });
    return;
  }

  auto cos = unwrap(c.co);
  if (!c.order) {
    try {
      c.order = reveal_order(order_keys(omega_v(cos), unwrap(c.cv)));
    } catch (const ProtocolError&) {
      c.finished = true;  // colliding keys: no valid order exists for this attempt
      return;
    }
    c.turn = 0;
    prompt(ctx, r, c);
  }

  while (c.turn < n) {
    auto idx = c.order->permutation[c.turn];
    if (!c.secret[idx] && ctx.now() < c.turn_deadline) return;
    if (++c.turn < n) prompt(ctx, r, c);
  }

  c.finished = true;
  if (all_present(c.secret)) {
    auto secrets = unwrap(c.secret);
    try_call([&] { ledger.generate_random_number(address_, r.id, secrets, c.sig); });
  } else {
    try_call([&] { ledger.request_to_submit_s(address_, r.id, cos, c.sig, *c.order, c.secret); });
  }
}

void LeaderActor::maybe_resume(ActorContext& ctx) {
  auto& ledger = ctx.ledger;
  if (!options_.resume_after_halt) return;
  if (!halted_since_) halted_since_ = ctx.now();
  if (ctx.now() < *halted_since_ + options_.resume_delay || ledger.active_count() < 2) return;
  Funds min = ledger.config().min_deposit;
  Funds top_up = ledger.leader_deposit() < min ? min - ledger.leader_deposit() : 0;
  try_call([&] { ledger.resume(address_, top_up); });
}

// ---- consumer --------------------------------------------------------------

ConsumerActor::ConsumerActor(Address address, std::size_t rounds, Funds fee, bool refund_on_halt)
    : address_(address), rounds_(rounds), fee_(fee), refund_on_halt_(refund_on_halt) {}

void ConsumerActor::step(ActorContext& ctx) {
  auto& ledger = ctx.ledger;
  if (ledger.halted()) {
    if (!refund_on_halt_) return;
    for (auto id : issued_)
      if (!ledger.round(id).terminal()) try_call([&] { ledger.refund(address_, id); });
    return;
  }
  if (issued_.size() >= rounds_) return;
  if (!issued_.empty() && !ledger.round(issued_.back()).terminal()) return;
  RoundId id = 0;
  if (try_call([&] { id = ledger.request_random_number(address_, fee_); })) issued_.push_back(id);
}

bool ConsumerActor::done(const Ledger& ledger) const {
  if (issued_.size() < rounds_) return false;
  return std::all_of(issued_.begin(), issued_.end(), [&](RoundId id) { return ledger.round(id).terminal(); });
}

}  // namespace cr2
