#include "ledger_harness.hpp"

#include "cr2/error.hpp"

#include <gtest/gtest.h>

#include "json.hpp"

namespace cr2 {
namespace {

using testing::LedgerHarness;

template <typename Fn>
Errc error_of(Fn&& fn) {
  try {
    fn();
  } catch (const ProtocolError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a ProtocolError";
  return Errc::InvalidArgument;
}

#define EXPECT_ERRC(expr, code) EXPECT_EQ(error_of([&] { (void)(expr); }), Errc::code)

// ---- registry ----

TEST(Registry, FirstActivationGetsIndexZero) {
  LedgerHarness h(0);
  auto key = SigningKey::derive("solo");
  EXPECT_EQ(h.ledger.deposit_and_activate(key.address(), LedgerHarness::kMin), 0u);
  EXPECT_EQ(h.ledger.active_count(), 1u);
}

TEST(Registry, DepositOneBelowMinimumRejected) {
  LedgerHarness h(0);
  EXPECT_ERRC(h.ledger.deposit_and_activate(address_from_u64(5), LedgerHarness::kMin - 1), InsufficientDeposit);
  EXPECT_EQ(h.ledger.active_count(), 0u);
}

TEST(Registry, DoubleActivationRejected) {
  LedgerHarness h(2);
  EXPECT_ERRC(h.ledger.deposit_and_activate(h.operators[0], LedgerHarness::kMin), AlreadyActive);
}

TEST(Registry, LeaderStakeBelowMinimumRejected) {
  EXPECT_ERRC(Ledger(LedgerHarness::make_config(Mode::Hybrid, address_from_u64(1)), 10), InsufficientDeposit);
}

TEST(Registry, ReactivationAfterSlashGetsHigherIndex) {
  LedgerHarness h(2);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(2);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto order = h.order_for(s);
  std::vector<std::optional<Bytes32>> known = {s[0], std::nullopt};
  h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), h.sign_all(r, cvs), order, known);
  h.jump_past_deadline(r);
  h.ledger.fail_to_submit_s(h.operators[0], r);
  ASSERT_EQ(h.ledger.halt_reason(), HaltReason::TooFewOperators);
  const auto* slashed = h.ledger.find_operator(h.operators[1]);
  ASSERT_FALSE(slashed->active);

  auto index = h.ledger.deposit_and_activate(h.operators[1], LedgerHarness::kMin);
  EXPECT_EQ(index, 2u);
  EXPECT_GT(index, h.ledger.find_operator(h.operators[0])->activation_index);
}

// ---- requests ----

TEST(Request, HealthyStateCreatesRoundZero) {
  LedgerHarness h(3);
  EXPECT_EQ(h.ledger.request_random_number(h.consumer, 10), 0u);
  EXPECT_EQ(h.ledger.round(0).phase, Phase::OffChainInProgress);
  EXPECT_EQ(h.ledger.funds().escrow, 10u);
}

TEST(Request, NeedsTwoOperatorsAndMinimumFee) {
  LedgerHarness h(1);
  EXPECT_ERRC(h.ledger.request_random_number(h.consumer, 10), NotEnoughOperators);
  h.add_operator();
  EXPECT_ERRC(h.ledger.request_random_number(h.consumer, 0), InsufficientFee);
}

TEST(Request, RejectedWhileHalted) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  h.jump_past_deadline(r);
  h.ledger.fail_to_request_s_or_generate_random_number(h.operators[0], r);
  EXPECT_ERRC(h.ledger.request_random_number(h.consumer, 10), ServiceHalted);
}

TEST(Request, SequentialRoundsQueueBehindCurrent) {
  LedgerHarness h(3);
  auto r0 = h.ledger.request_random_number(h.consumer, 10);
  auto r1 = h.ledger.request_random_number(h.consumer, 10);
  EXPECT_EQ(h.ledger.round(r1).phase, Phase::Queued);
  h.honest_hybrid(r0);
  EXPECT_EQ(h.ledger.round(r1).phase, Phase::OffChainInProgress);
  EXPECT_EQ(h.ledger.current_round(), r1);
}

// ---- hybrid leader path ----

TEST(MerkleRoot, LeaderOnly) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  Digest32 root;
  EXPECT_ERRC(h.ledger.submit_merkle_root(h.operators[0], r, root), NotLeader);
  h.ledger.submit_merkle_root(h.leader, r, root);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::MerkleRootSubmitted);
  EXPECT_EQ(h.ledger.round(r).merkle_root, root);
}

TEST(MerkleRoot, LateSubmissionLeftToLeaderFailurePath) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  h.jump_past_deadline(r);
  EXPECT_ERRC(h.ledger.submit_merkle_root(h.leader, r, Digest32{}), WindowClosed);
}

TEST(Generate, HonestThreeOperatorRound) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto out = h.ledger.generate_random_number(h.leader, r, s, h.sign_all(r, cvs));
  EXPECT_EQ(out, omega_o(s));
  EXPECT_EQ(h.ledger.round(r).phase, Phase::Finalized);
  EXPECT_EQ(h.ledger.round(r).output, out);
  EXPECT_EQ(h.ledger.balance_of(h.leader), 10u);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

TEST(Generate, SubstitutedSecretFailsReconstruction) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto sigs = h.sign_all(r, cvs);
  auto bad = s;
  bad[1].bytes[7] ^= 1;
  EXPECT_ERRC(h.ledger.generate_random_number(h.leader, r, bad, sigs), RootMismatch);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::MerkleRootSubmitted);
}

TEST(Generate, SignaturesFromEarlierAttemptRejected) {
  LedgerHarness h(4);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(4);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto order = h.order_for(s);
  std::vector<std::optional<Bytes32>> known(s.begin(), s.end());
  known[3].reset();
  auto sigs0 = h.sign_all(r, cvs);
  h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), sigs0, order, known);
  h.jump_past_deadline(r);
  h.ledger.fail_to_submit_s(h.operators[0], r);
  ASSERT_EQ(h.ledger.round(r).attempt_id, 1u);

  // The first three operators reuse their secrets and attempt-0 signatures.
  std::vector<Bytes32> s1(s.begin(), s.begin() + 3);
  auto cvs1 = h.cvs_of(s1);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs1));
  std::vector<std::optional<RecoverableSignature>> replayed(sigs0.begin(), sigs0.begin() + 3);
  EXPECT_ERRC(h.ledger.generate_random_number(h.leader, r, s1, replayed), SignatureInvalid);
  EXPECT_EQ(h.ledger.generate_random_number(h.leader, r, s1, h.sign_all(r, cvs1)), omega_o(s1));
}

TEST(Generate, MissingSignatureRejected) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto sigs = h.sign_all(r, cvs);
  sigs[2].reset();
  EXPECT_ERRC(h.ledger.generate_random_number(h.leader, r, s, sigs), SignatureRequired);
  sigs[2] = sigs[1];
  EXPECT_ERRC(h.ledger.generate_random_number(h.leader, r, s, sigs), SignatureInvalid);
}

TEST(Generate, LastRevealerRewardPaidFromFee) {
  auto cfg = LedgerHarness::make_config(Mode::Hybrid, address_from_u64(0x1EAD));
  cfg.last_revealer_reward_bps = 2500;
  LedgerHarness h(0);
  h.ledger = Ledger(cfg, LedgerHarness::kMin);
  for (int i = 0; i < 3; ++i) h.add_operator();
  auto r = h.ledger.request_random_number(h.consumer, 100);
  auto s = h.secrets(3);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  h.ledger.generate_random_number(h.leader, r, s, h.sign_all(r, cvs));
  auto last = h.operators[h.order_for(s).last()];
  EXPECT_EQ(h.ledger.balance_of(last), 25u);
  EXPECT_EQ(h.ledger.balance_of(h.leader), 75u);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

TEST(Generate, WrongRootAcceptedThenLeaderSlashed) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  auto cvs = h.cvs_of(s);
  auto wrong = merkle_root(cvs);
  wrong.bytes[0] ^= 0x80;
  h.ledger.submit_merkle_root(h.leader, r, wrong);
  EXPECT_ERRC(h.ledger.generate_random_number(h.leader, r, s, h.sign_all(r, cvs)), RootMismatch);
  EXPECT_ERRC(h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), h.sign_all(r, cvs), h.order_for(s),
                                           std::vector<std::optional<Bytes32>>(3)),
              RootMismatch);
  h.jump_past_deadline(r);
  h.ledger.fail_to_request_s_or_generate_random_number(h.operators[2], r);
  EXPECT_EQ(h.ledger.halt_reason(), HaltReason::LeaderFailure);
  EXPECT_EQ(h.ledger.leader_deposit(), 0u);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

// ---- on-chain mode ----

TEST(OnChain, HonestTwoOperatorFlow) {
  LedgerHarness h(2, Mode::OnChain);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OnChainCvWindow);
  auto s = h.secrets(2);
  auto cos = h.cos_of(s);
  auto cvs = h.cvs_of(s);
  for (int i = 0; i < 2; ++i) h.ledger.submit_cv(h.operators[i], r, cvs[i]);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OnChainCoWindow);
  for (int i = 0; i < 2; ++i) h.ledger.submit_co(h.operators[i], r, cos[i]);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OnChainSWindow);
  auto order = h.order_for(s);
  h.ledger.submit_reveal_order(h.operators[order.permutation[0]], r, order);
  EXPECT_FALSE(h.ledger.submit_s(h.operators[order.permutation[0]], r, s[order.permutation[0]]));
  auto out = h.ledger.submit_s(h.operators[order.permutation[1]], r, s[order.permutation[1]]);
  ASSERT_TRUE(out);
  EXPECT_EQ(*out, omega_o(s));
  EXPECT_EQ(h.ledger.round(r).phase, Phase::Finalized);
}

TEST(OnChain, CoMustHashToCv) {
  LedgerHarness h(2, Mode::OnChain);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(2);
  auto cvs = h.cvs_of(s);
  for (int i = 0; i < 2; ++i) h.ledger.submit_cv(h.operators[i], r, cvs[i]);
  EXPECT_ERRC(h.ledger.submit_co(h.operators[0], r, h.cos_of(s)[1]), CommitmentMismatch);
}

TEST(OnChain, DuplicateSubmissionsReplayed) {
  LedgerHarness h(3, Mode::OnChain);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  auto cos = h.cos_of(s);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_cv(h.operators[0], r, cvs[0]);
  EXPECT_ERRC(h.ledger.submit_cv(h.operators[0], r, cvs[0]), Replayed);
  for (int i = 1; i < 3; ++i) h.ledger.submit_cv(h.operators[i], r, cvs[i]);
  for (int i = 0; i < 3; ++i) h.ledger.submit_co(h.operators[i], r, cos[i]);
  auto order = h.order_for(s);
  auto first = order.permutation[0];
  h.ledger.submit_reveal_order(h.operators[first], r, order);
  h.ledger.submit_s(h.operators[first], r, s[first]);
  EXPECT_ERRC(h.ledger.submit_s(h.operators[first], r, s[first]), Replayed);
  EXPECT_TRUE(h.ledger.seen({SubmissionKind::S, h.operators[first], r, 0}));
}

TEST(OnChain, OutOfTurnRevealRejected) {
  LedgerHarness h(3, Mode::OnChain);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  for (int i = 0; i < 3; ++i) h.ledger.submit_cv(h.operators[i], r, h.cvs_of(s)[i]);
  for (int i = 0; i < 3; ++i) h.ledger.submit_co(h.operators[i], r, h.cos_of(s)[i]);
  auto order = h.order_for(s);
  h.ledger.submit_reveal_order(h.operators[0], r, order);
  auto second = order.permutation[1];
  EXPECT_ERRC(h.ledger.submit_s(h.operators[second], r, s[second]), NotYourTurn);
}

TEST(OnChain, RevealOrderChecks) {
  LedgerHarness h(4, Mode::OnChain);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(4);
  for (int i = 0; i < 4; ++i) h.ledger.submit_cv(h.operators[i], r, h.cvs_of(s)[i]);
  for (int i = 0; i < 4; ++i) h.ledger.submit_co(h.operators[i], r, h.cos_of(s)[i]);
  auto order = h.order_for(s);

  auto swapped = order;
  std::swap(swapped.permutation[1], swapped.permutation[2]);
  std::swap(swapped.keys[1], swapped.keys[2]);
  EXPECT_ERRC(h.ledger.submit_reveal_order(h.operators[0], r, swapped), OrderInvalid);

  // Keys derived from a different c_o set (and so a different omega_v).
  auto stale_cos = h.cos_of(s);
  stale_cos[0].bytes[3] ^= 1;
  auto stale = reveal_order(order_keys(omega_v(stale_cos), h.cvs_of(s)));
  EXPECT_ERRC(h.ledger.submit_reveal_order(h.operators[0], r, stale), OrderInvalid);

  h.ledger.submit_reveal_order(h.operators[0], r, order);
  EXPECT_EQ(h.ledger.round(r).reveal_order, order);
}

TEST(OnChain, SilentCvSlashedAndRetried) {
  LedgerHarness h(3, Mode::OnChain);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  h.ledger.submit_cv(h.operators[0], r, h.cvs_of(s)[0]);
  h.ledger.submit_cv(h.operators[1], r, h.cvs_of(s)[1]);
  EXPECT_ERRC(h.ledger.fail_to_submit_cv(h.operators[0], r), TooEarly);
  h.jump_past_deadline(r);
  h.ledger.fail_to_submit_cv(h.operators[0], r);
  EXPECT_FALSE(h.ledger.find_operator(h.operators[2])->active);
  EXPECT_EQ(h.ledger.round(r).attempt_id, 1u);
  EXPECT_EQ(h.ledger.round(r).participants.size(), 2u);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OnChainCvWindow);
  EXPECT_EQ(h.honest_onchain(r), h.ledger.round(r).output);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

// ---- hybrid disputes ----

TEST(CvDispute, WindowOpensWithSignedData) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  auto cvs = h.cvs_of(s);
  auto sigs = h.sign_all(r, cvs);
  std::vector<std::optional<Digest32>> known = {cvs[0], cvs[1], std::nullopt};
  std::array<std::size_t, 1> accused{2};
  h.ledger.request_to_submit_cv(h.leader, r, accused, known, sigs);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OnChainCvWindow);

  // The accused responds in time and the round goes on.
  EXPECT_ERRC(h.ledger.submit_cv(h.operators[0], r, cvs[0]), Replayed);
  h.ledger.submit_cv(h.operators[2], r, cvs[2]);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OffChainInProgress);
  auto bad_root = merkle_root(cvs);
  bad_root.bytes[0] ^= 1;
  EXPECT_ERRC(h.ledger.submit_merkle_root(h.leader, r, bad_root), RootMismatch);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  std::vector<std::optional<RecoverableSignature>> no_sigs(3);
  EXPECT_EQ(h.ledger.generate_random_number(h.leader, r, s, no_sigs), omega_o(s));
}

TEST(CvDispute, UnsignedFabricationRejected) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(3);
  auto cvs = h.cvs_of(s);
  auto sigs = h.sign_all(r, cvs);
  std::vector<std::optional<Digest32>> known = {cvs[0], cvs[1], std::nullopt};
  known[1]->bytes[0] ^= 1;
  std::array<std::size_t, 1> accused{2};
  EXPECT_ERRC(h.ledger.request_to_submit_cv(h.leader, r, accused, known, sigs), SignatureRequired);
  known[1] = cvs[1];
  sigs[1].reset();
  EXPECT_ERRC(h.ledger.request_to_submit_cv(h.leader, r, accused, known, sigs), SignatureRequired);
  EXPECT_ERRC(h.ledger.request_to_submit_cv(h.operators[0], r, accused, known, sigs), NotLeader);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OffChainInProgress);
}

TEST(CoDispute, WithholderSlashedOthersContinue) {
  LedgerHarness h(4);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(4);
  auto cvs = h.cvs_of(s);
  auto cos = h.cos_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  std::array<std::size_t, 2> accused{1, 3};
  h.ledger.request_to_submit_co(h.leader, r, accused, cvs, h.sign_all(r, cvs));
  EXPECT_ERRC(h.ledger.submit_co(h.operators[0], r, cos[0]), NotParticipant);
  h.ledger.submit_co(h.operators[1], r, cos[1]);
  h.jump_past_deadline(r);
  h.ledger.fail_to_submit_co(h.operators[0], r);
  EXPECT_FALSE(h.ledger.find_operator(h.operators[3])->active);
  EXPECT_TRUE(h.ledger.find_operator(h.operators[1])->active);
  EXPECT_EQ(h.ledger.round(r).participants.size(), 3u);
  h.honest_hybrid(r);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::Finalized);
}

TEST(SDispute, RequestChecks) {
  LedgerHarness h(10);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(10);
  auto cvs = h.cvs_of(s);
  auto cos = h.cos_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto sigs = h.sign_all(r, cvs);
  auto order = h.order_for(s);
  std::vector<std::optional<Bytes32>> known(s.begin(), s.end());
  known[4].reset();

  auto tampered = cos;
  tampered[6].bytes[9] ^= 1;
  EXPECT_ERRC(h.ledger.request_to_submit_s(h.leader, r, tampered, sigs, order, known), RootMismatch);
  auto wrong = order;
  std::reverse(wrong.permutation.begin(), wrong.permutation.end());
  std::reverse(wrong.keys.begin(), wrong.keys.end());
  EXPECT_ERRC(h.ledger.request_to_submit_s(h.leader, r, cos, sigs, wrong, known), OrderInvalid);

  auto before = h.ledger.meter().signature_verifications;
  h.ledger.request_to_submit_s(h.leader, r, cos, sigs, order, known);
  EXPECT_EQ(h.ledger.meter().signature_verifications - before, 10u);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::OnChainSWindow);
}

TEST(SDispute, RequestCostAffineInN) {
  std::vector<std::uint64_t> sigs_by_n, work_by_n;
  for (std::size_t n = 3; n <= 32; ++n) {
    LedgerHarness h(n);
    auto r = h.ledger.request_random_number(h.consumer, 10);
    auto s = h.secrets(n);
    auto cvs = h.cvs_of(s);
    h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
    std::vector<std::optional<Bytes32>> known(s.begin(), s.end());
    known[0].reset();
    h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), h.sign_all(r, cvs), h.order_for(s), known);
    const auto& d = h.ledger.log().back().delta;
    sigs_by_n.push_back(d.signature_verifications);
    work_by_n.push_back(d.work());
  }
  for (std::size_t i = 2; i < sigs_by_n.size(); ++i) {
    EXPECT_EQ(sigs_by_n[i] - sigs_by_n[i - 1], sigs_by_n[1] - sigs_by_n[0]);
    EXPECT_EQ(work_by_n[i] - work_by_n[i - 1], work_by_n[1] - work_by_n[0]);
  }
  EXPECT_EQ(sigs_by_n[1] - sigs_by_n[0], 1u);
}

TEST(SDispute, TenOperatorsOneWithholderRetrySucceeds) {
  LedgerHarness h(10);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(10);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  std::vector<std::optional<Bytes32>> known(s.begin(), s.end());
  known[7].reset();
  h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), h.sign_all(r, cvs), h.order_for(s), known);
  EXPECT_ERRC(h.ledger.fail_to_submit_s(h.operators[0], r), TooEarly);
  EXPECT_ERRC(h.ledger.submit_s(h.operators[0], r, s[0]), Replayed);
  h.jump_past_deadline(r);
  h.ledger.fail_to_submit_s(h.operators[0], r);

  EXPECT_EQ(h.ledger.active_count(), 9u);
  EXPECT_EQ(h.ledger.deposit_of(h.operators[7]), 0u);
  // 1000 split in 9 + 1 shares.
  EXPECT_EQ(h.ledger.balance_of(h.operators[0]), 100u);
  EXPECT_EQ(h.ledger.balance_of(h.leader), 100u);
  EXPECT_TRUE(h.ledger.funds().conserved());

  h.honest_hybrid(r);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::Finalized);
  EXPECT_EQ(h.ledger.round(r).attempt_id, 1u);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

TEST(SDispute, LateRevealInWindowFinalizes) {
  LedgerHarness h(5);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(5);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto order = h.order_for(s);
  std::vector<std::optional<Bytes32>> known(s.begin(), s.end());
  known[order.permutation[1]].reset();
  known[order.permutation[3]].reset();
  h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), h.sign_all(r, cvs), order, known);
  auto a = order.permutation[1], b = order.permutation[3];
  EXPECT_ERRC(h.ledger.submit_s(h.operators[b], r, s[b]), NotYourTurn);
  h.ledger.set_time(h.ledger.round(r).deadline);
  EXPECT_FALSE(h.ledger.submit_s(h.operators[a], r, s[a]));
  auto out = h.ledger.submit_s(h.operators[b], r, s[b]);
  ASSERT_TRUE(out);
  EXPECT_EQ(*out, omega_o(s));
}

TEST(SDispute, TwoOperatorsHaltsUntilNewOperatorAndResume) {
  LedgerHarness h(2);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(2);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  std::vector<std::optional<Bytes32>> known = {s[0], std::nullopt};
  h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), h.sign_all(r, cvs), h.order_for(s), known);
  h.jump_past_deadline(r);
  h.ledger.fail_to_submit_s(h.operators[0], r);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::Halted);
  EXPECT_EQ(h.ledger.halt_reason(), HaltReason::TooFewOperators);
  EXPECT_ERRC(h.ledger.resume(h.leader, 0), NotEnoughOperators);
  h.add_operator();
  h.ledger.resume(h.leader, 0);
  EXPECT_EQ(h.ledger.round(r).attempt_id, 1u);
  h.honest_hybrid(r);
  EXPECT_EQ(h.ledger.round(r).phase, Phase::Finalized);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

// ---- leader failure, resume, refund ----

TEST(LeaderFailure, SilentLeaderSlashedAndHalted) {
  LedgerHarness h(4);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  h.ledger.set_time(h.ledger.round(r).deadline);
  EXPECT_ERRC(h.ledger.fail_to_request_s_or_generate_random_number(h.operators[1], r), TooEarly);
  h.advance(1);
  EXPECT_ERRC(h.ledger.fail_to_request_s_or_generate_random_number(h.consumer, r), NotParticipant);
  h.ledger.fail_to_request_s_or_generate_random_number(h.operators[1], r);
  EXPECT_TRUE(h.ledger.halted());
  EXPECT_EQ(h.ledger.leader_deposit(), 0u);
  for (const auto& op : h.operators) EXPECT_EQ(h.ledger.balance_of(op), 250u);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

TEST(LeaderFailure, GenerateDeadlineAlsoEnforced) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  h.ledger.submit_merkle_root(h.leader, r, Digest32{});
  h.ledger.set_time(h.ledger.round(r).deadline);
  EXPECT_ERRC(h.ledger.fail_to_request_s_or_generate_random_number(h.operators[0], r), TooEarly);
  h.advance(1);
  h.ledger.fail_to_request_s_or_generate_random_number(h.operators[0], r);
  EXPECT_EQ(h.ledger.halt_reason(), HaltReason::LeaderFailure);
}

struct HaltedLedger : LedgerHarness {
  RoundId r0 = 0, r1 = 0;
  Address other = address_from_u64(0xBEEF);
  HaltedLedger() : LedgerHarness(3) {
    r0 = ledger.request_random_number(consumer, 10);
    r1 = ledger.request_random_number(other, 20);
    jump_past_deadline(r0);
    ledger.fail_to_request_s_or_generate_random_number(operators[0], r0);
  }
};

TEST(Resume, PendingRoundFinalizesAfterResume) {
  HaltedLedger h;
  EXPECT_ERRC(h.ledger.resume(h.operators[0], LedgerHarness::kMin), NotLeader);
  EXPECT_ERRC(h.ledger.resume(h.leader, 0), InsufficientDeposit);
  h.ledger.resume(h.leader, LedgerHarness::kMin);
  EXPECT_FALSE(h.ledger.halted());
  EXPECT_ERRC(h.ledger.resume(h.leader, LedgerHarness::kMin), NotHalted);
  EXPECT_EQ(h.ledger.round(h.r0).attempt_id, 1u);
  h.honest_hybrid(h.r0);
  EXPECT_EQ(h.ledger.round(h.r0).phase, Phase::Finalized);
  h.honest_hybrid(h.r1);
  EXPECT_EQ(h.ledger.round(h.r1).attempt_id, 0u);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

TEST(Refund, ConsumerRefundsDuringHalt) {
  HaltedLedger h;
  EXPECT_ERRC(h.ledger.refund(h.other, h.r0), NotYourRequest);
  EXPECT_EQ(h.ledger.refund(h.consumer, h.r0), 10u);
  EXPECT_EQ(h.ledger.balance_of(h.consumer), 10u);
  EXPECT_EQ(h.ledger.round(h.r0).phase, Phase::Refunded);
  EXPECT_ERRC(h.ledger.refund(h.consumer, h.r0), AlreadyRefunded);
  EXPECT_TRUE(h.ledger.funds().conserved());
}

TEST(Refund, RefundedRoundSkippedOnResume) {
  HaltedLedger h;
  h.ledger.refund(h.consumer, h.r0);
  h.ledger.resume(h.leader, LedgerHarness::kMin);
  EXPECT_EQ(h.ledger.round(h.r0).phase, Phase::Refunded);
  EXPECT_EQ(h.ledger.current_round(), h.r1);
  h.honest_hybrid(h.r1);
  auto r2 = h.ledger.request_random_number(h.consumer, 10);
  EXPECT_EQ(r2, 2u);
  EXPECT_ERRC(h.ledger.refund(h.other, h.r1), AlreadyProcessed);
  EXPECT_ERRC(h.ledger.refund(h.consumer, r2), NotHalted);
  EXPECT_ERRC(h.ledger.refund(h.consumer, 99), UnknownRound);
}

TEST(Refund, QueuedRoundRefundable) {
  HaltedLedger h;
  EXPECT_EQ(h.ledger.refund(h.other, h.r1), 20u);
  h.ledger.resume(h.leader, LedgerHarness::kMin);
  h.honest_hybrid(h.r0);
  EXPECT_FALSE(h.ledger.current_round());
  EXPECT_EQ(h.ledger.round(h.r1).phase, Phase::Refunded);
}

// ---- properties ----

TEST(Properties, RevertedCallsChangeNothing) {
  LedgerHarness h(5);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  auto s = h.secrets(5);
  auto cvs = h.cvs_of(s);
  h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
  auto sigs = h.sign_all(r, cvs);

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto snap = h.ledger.snapshot_json();
    auto meter = h.ledger.meter();
    auto log_size = h.ledger.log().size();
    auto bad = s;
    bad[rng() % 5].bytes[rng() % 32] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    EXPECT_ANY_THROW(h.ledger.generate_random_number(h.leader, r, bad, sigs));
    EXPECT_EQ(h.ledger.snapshot_json(), snap);
    EXPECT_EQ(h.ledger.meter(), meter);
    ASSERT_EQ(h.ledger.log().size(), log_size + 1);
    EXPECT_FALSE(h.ledger.log().back().ok);
    EXPECT_EQ(h.ledger.log().back().error, Errc::RootMismatch);
  }
}

TEST(Properties, SignatureBoundToDeployment) {
  LedgerHarness a(3);
  auto cfg = LedgerHarness::make_config(Mode::Hybrid, a.leader);
  cfg.chain_id = 5;
  Ledger other_chain(cfg, LedgerHarness::kMin);
  cfg.chain_id = 1;
  cfg.ver_contract = address_from_u64(0xD00D);
  Ledger other_contract(cfg, LedgerHarness::kMin);
  Digest32 cv = keccak(std::string_view("x"));
  auto d = a.ledger.commit_digest(0, 0, cv);
  EXPECT_NE(d, other_chain.commit_digest(0, 0, cv));
  EXPECT_NE(d, other_contract.commit_digest(0, 0, cv));
  EXPECT_NE(d, a.ledger.commit_digest(0, 1, cv));
  EXPECT_NE(d, a.ledger.commit_digest(1, 0, cv));
}

TEST(Properties, ConservationAndMonotoneMeterOverManyRounds) {
  LedgerHarness h(6);
  std::uint64_t last_work = 0;
  std::size_t last_seen = 0;
  for (int round = 0; round < 12; ++round) {
    auto r = h.ledger.request_random_number(h.consumer, 7 + round);
    auto n = h.ledger.round(r).participants.size();
    auto s = h.secrets(n);
    auto cvs = h.cvs_of(s);
    h.ledger.submit_merkle_root(h.leader, r, merkle_root(cvs));
    if (round % 3 == 1 && n > 2) {
      std::vector<std::optional<Bytes32>> known(s.begin(), s.end());
      known[round % n].reset();
      h.ledger.request_to_submit_s(h.leader, r, h.cos_of(s), h.sign_all(r, cvs), h.order_for(s), known);
      h.jump_past_deadline(r);
      h.ledger.fail_to_submit_s(h.leader, r);
      if (h.ledger.halted()) break;
      h.honest_hybrid(r);
    } else {
      h.ledger.generate_random_number(h.leader, r, s, h.sign_all(r, cvs));
    }
    EXPECT_TRUE(h.ledger.funds().conserved());
    EXPECT_GE(h.ledger.meter().work(), last_work);
    EXPECT_GE(h.ledger.seen_size(), last_seen);
    last_work = h.ledger.meter().work();
    last_seen = h.ledger.seen_size();
    h.advance(1);
  }
  EXPECT_EQ(h.ledger.active_count(), 2u);
}

TEST(Properties, SnapshotIsValidJson) {
  LedgerHarness h(3);
  auto r = h.ledger.request_random_number(h.consumer, 10);
  h.honest_hybrid(r);
  auto doc = nlohmann::json::parse(h.ledger.snapshot_json());
  EXPECT_EQ(doc["rounds"][0]["phase"], "Finalized");
  EXPECT_EQ(doc["operators"].size(), 3u);
}

}  // namespace
}  // namespace cr2
