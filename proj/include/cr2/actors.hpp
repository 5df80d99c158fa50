#pragma once

#include "cr2/commitment.hpp"
#include "cr2/ledger.hpp"

#include <functional>
#include <map>
#include <random>
#include <set>

namespace cr2 {

enum class OperatorPolicy {
  Honest,
  WithholdCvOffChain,
  WithholdCoOffChain,
  WithholdSOffChain,
  NeverSubmitOnChain,
  LateOnChainGriefer,
};

enum class LeaderPolicy { Honest, WithholdMerkleRoot, WithholdGenerate, SubmitWrongRoot };

std::string_view to_string(OperatorPolicy p) noexcept;
std::string_view to_string(LeaderPolicy p) noexcept;
/// Scenario-file names, e.g. "withhold-s". Throws InvalidScenario.
OperatorPolicy parse_operator_policy(std::string_view name);
LeaderPolicy parse_leader_policy(std::string_view name);

enum class MessageKind { CommitCv, RevealCo, RevealS, OrderAnnouncement };

std::string_view to_string(MessageKind k) noexcept;

struct OffChainMessage {
  MessageKind kind = MessageKind::CommitCv;
  Address sender;
  Address recipient;
  RoundId round = 0;
  std::uint64_t attempt = 0;
  Digest32 payload;
  /// Present on CommitCv: the operator's signature over the typed digest.
  std::optional<RecoverableSignature> signature;
};

/// What an actor sees during its step.
struct ActorContext {
  Ledger& ledger;
  std::function<void(OffChainMessage)> send;

  Tick now() const { return ledger.now(); }
};

/// Calls into the ledger on behalf of an actor. Reverts are expected in
/// adversarial runs; they are already in the ledger's log.
template <typename Fn>
bool try_call(Fn&& fn) {
  try {
    fn();
    return true;
  } catch (const ProtocolError&) {
    return false;
  }
}

class OperatorActor {
 public:
  /// Secrets are drawn from a generator seeded by (seed, index). A standby
  /// operator stays inactive until the service halts for lack of operators.
  OperatorActor(SigningKey key, OperatorPolicy policy, std::uint64_t seed, std::size_t index, bool standby,
                Funds deposit);

  const Address& address() const noexcept { return key_.address(); }
  OperatorPolicy policy() const noexcept { return policy_; }
  bool is_standby() const noexcept { return standby_; }
  /// True once the operator has activated (standbys only after stepping in).
  bool joined() const noexcept { return joined_; }

  void activate(Ledger& ledger);
  void deliver(const OffChainMessage& msg) { inbox_.push_back(msg); }
  void step(ActorContext& ctx);

  std::size_t secrets_revealed_off_chain() const noexcept { return offchain_s_; }
  std::size_t on_chain_secret_submissions() const noexcept { return onchain_s_; }

 private:
  struct Attempt {
    RoundId round = 0;
    std::uint64_t attempt = 0;
    CommitmentChain chain;
    bool sent_cv = false;
    bool sent_co = false;
    bool sent_s = false;
  };

  Attempt& attempt_for(const RoundState& r);
  void step_hybrid(ActorContext& ctx, const RoundState& r, std::size_t idx);
  void step_onchain(ActorContext& ctx, const RoundState& r, std::size_t idx);
  void submit_s(ActorContext& ctx, const RoundState& r, std::size_t idx);
  void trigger_failures(ActorContext& ctx, const RoundState& r);

  bool off_chain_cv() const noexcept;
  bool off_chain_co() const noexcept;
  bool off_chain_s() const noexcept;
  bool answers_window(Phase window) const noexcept;
  bool waits_for_deadline() const noexcept { return policy_ == OperatorPolicy::LateOnChainGriefer; }

  SigningKey key_;
  OperatorPolicy policy_;
  std::mt19937_64 rng_;
  bool standby_;
  bool joined_ = false;
  Funds deposit_;
  std::optional<Attempt> current_;
  std::vector<OffChainMessage> inbox_;
  std::size_t offchain_s_ = 0;
  std::size_t onchain_s_ = 0;
};

struct LeaderOptions {
  LeaderPolicy policy = LeaderPolicy::Honest;
  /// Number of attempts on which the fault fires before the leader behaves.
  std::uint32_t fault_count = 1;
  bool resume_after_halt = true;
  Tick resume_delay = 2;
  Tick latency = 1;
};

class LeaderActor {
 public:
  LeaderActor(Address address, LeaderOptions options);

  const Address& address() const noexcept { return address_; }
  void deliver(const OffChainMessage& msg) { inbox_.push_back(msg); }
  void step(ActorContext& ctx);

 private:
  struct Collection {
    RoundId round = 0;
    std::uint64_t attempt = 0;
    std::vector<std::optional<Digest32>> cv;
    std::vector<std::optional<RecoverableSignature>> sig;
    std::vector<std::optional<Digest32>> co;
    std::vector<std::optional<Bytes32>> secret;
    bool requested_cv = false;
    bool requested_co = false;
    bool root_sent = false;
    bool finished = false;
    std::optional<RevealOrder> order;
    std::size_t turn = 0;
    Tick turn_deadline = 0;
    bool faulty = false;
  };

  Collection& collection_for(const RoundState& r);
  void absorb(const Ledger& ledger, const RoundState& r, Collection& c);
  void collect_phase(ActorContext& ctx, const RoundState& r, Collection& c);
  void reveal_phase(ActorContext& ctx, const RoundState& r, Collection& c);
  void prompt(ActorContext& ctx, const RoundState& r, Collection& c);
  void maybe_resume(ActorContext& ctx);

  Address address_;
  LeaderOptions options_;
  std::uint32_t faults_used_ = 0;
  std::optional<Collection> current_;
  std::vector<OffChainMessage> inbox_;
  std::optional<Tick> halted_since_;
};

/// Requests rounds one at a time until `rounds` have been issued.
class ConsumerActor {
 public:
  ConsumerActor(Address address, std::size_t rounds, Funds fee, bool refund_on_halt);

  const Address& address() const noexcept { return address_; }
  void step(ActorContext& ctx);
  /// All requested rounds issued and each Finalized or Refunded.
  bool done(const Ledger& ledger) const;

 private:
  Address address_;
  std::size_t rounds_;
  Funds fee_;
  bool refund_on_halt_;
  std::vector<RoundId> issued_;
};

}  // namespace cr2
