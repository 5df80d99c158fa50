#include "cr2/simulator.hpp"
#include "cr2/beacon_math.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace cr2 {
namespace {

using testing::scenario_dir;

Scenario shipped(const std::string& name) { return Scenario::load(scenario_dir() / (name + ".json")); }

std::vector<std::string> shipped_names() {
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(scenario_dir()))
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out(hi - lo + 1);
  std::iota(out.begin(), out.end(), lo);
  return out;
}

TEST(Scenarios, AllShippedFilesRunClean) {
  auto names = shipped_names();
  ASSERT_GE(names.size(), 5u);
  for (const auto& name : names) {
    SCOPED_TRACE(name);
    auto t = run(shipped(name));
    EXPECT_TRUE(t.violations.empty()) << t.violations.front();
    EXPECT_TRUE(t.route_matches());
    EXPECT_TRUE(t.ledger->funds().conserved());
  }
}

TEST(Scenarios, AbnormalRoutesMatchExactly) {
  using R = std::vector<std::string>;
  EXPECT_EQ(run(shipped("participant-withholding")).routes.at(0),
            (R{"submitMerkleRoot", "requestToSubmitS", "failToSubmitS", "submitMerkleRoot", "generateRandomNumber"}));
  EXPECT_EQ(run(shipped("participant-withholding-n2")).routes.at(0),
            (R{"submitMerkleRoot", "requestToSubmitS", "failToSubmitS", "depositAndActivate", "resume",
               "submitMerkleRoot", "generateRandomNumber"}));
  EXPECT_EQ(run(shipped("leader-withholding")).routes.at(0),
            (R{"submitMerkleRoot", "failToRequestSOrGenerateRandomNumber", "resume", "submitMerkleRoot",
               "generateRandomNumber"}));
  EXPECT_EQ(run(shipped("griefing")).routes.at(0), (R{"submitMerkleRoot", "requestToSubmitS", "submitS"}));
}

TEST(Scenarios, LaterRoundsOfWithholdingRunsAreNormal) {
  auto t = run(shipped("participant-withholding"));
  ASSERT_EQ(t.outputs.size(), 2u);
  EXPECT_EQ(t.routes.at(1), (std::vector<std::string>{"submitMerkleRoot", "generateRandomNumber"}));
}

TEST(Scenarios, OutputsMatchDirectEvaluation) {
  // The simulator flags a mismatch as a violation; make sure the check is live.
  auto t = run(shipped("baseline"));
  ASSERT_EQ(t.outputs.size(), 3u);
  EXPECT_TRUE(t.violations.empty());
  std::set<Digest32> distinct;
  for (const auto& [r, out] : t.outputs) distinct.insert(out);
  EXPECT_EQ(distinct.size(), 3u);
}

TEST(Scenarios, JsonRoundTrip) {
  for (const auto& name : shipped_names()) {
    auto s = shipped(name);
    EXPECT_EQ(Scenario::from_json(s.to_json()).to_json(), s.to_json()) << name;
  }
}

TEST(Scenarios, RejectsBadScripts) {
  auto code_of = [](const std::string& text) {
    try {
      Scenario::from_json(text);
    } catch (const ProtocolError& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  EXPECT_EQ(code_of("{"), Errc::InvalidScenario);
  EXPECT_EQ(code_of(R"({"operators": 1})"), Errc::InvalidScenario);
  EXPECT_EQ(code_of(R"({"operators": 3, "faults": [{"index": 3, "policy": "withhold-s"}]})"), Errc::InvalidScenario);
  EXPECT_EQ(code_of(R"({"faults": [{"index": 0, "policy": "sulk"}]})"), Errc::InvalidScenario);
  EXPECT_EQ(code_of(R"({"mode": "sidechain"})"), Errc::InvalidScenario);
  EXPECT_THROW(Scenario::load(scenario_dir() / "no-such-file.json"), ProtocolError);
}

TEST(Determinism, SameSeedSameTranscript) {
  for (const auto& name : shipped_names()) {
    auto s = shipped(name);
    auto a = run(s), b = run(s);
    EXPECT_EQ(a.to_jsonl(), b.to_jsonl()) << name;
    EXPECT_EQ(a.outputs, b.outputs) << name;
  }
}

TEST(Determinism, SeedChangesOutputsNotRoutes) {
  auto s = shipped("participant-withholding");
  auto a = run(s);
  s.seed = 8;
  auto b = run(s);
  EXPECT_NE(a.outputs.at(0), b.outputs.at(0));
  EXPECT_EQ(a.routes.at(0), b.routes.at(0));
}

TEST(Transcript, JsonLinesAreOrdered) {
  auto t = run(shipped("leader-withholding"));
  for (std::size_t i = 1; i < t.events.size(); ++i) {
    const auto& p = t.events[i - 1];
    const auto& e = t.events[i];
    EXPECT_TRUE(p.tick < e.tick || (p.tick == e.tick && p.seq < e.seq));
  }
  auto jsonl = t.to_jsonl();
  auto lines = std::count(jsonl.begin(), jsonl.end(), '\n');
  EXPECT_EQ(static_cast<std::size_t>(lines), t.events.size());
}

TEST(Liveness, TickBudgetExhaustionThrows) {
  auto s = shipped("baseline");
  s.tick_budget = 3;
  try {
    run(s);
    FAIL() << "expected LivenessTimeout";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), Errc::LivenessTimeout);
  }
}

TEST(Sweep, BaselineUsesTwoTransactionsAtEveryN) {
  auto rows = sweep(shipped("baseline"), std::vector<std::size_t>{2, 5, 10, 32});
  for (const auto& r : rows) {
    EXPECT_TRUE(r.ok) << r.n;
    EXPECT_EQ(r.route_cost.transactions, 2u) << r.n;
    EXPECT_EQ(r.route.size(), 2u);
  }
}

TEST(Sweep, ParticipantWithholdingCountersAreAffine) {
  auto rows = sweep(shipped("participant-withholding"), range(3, 32));
  for (const auto& r : rows) ASSERT_TRUE(r.ok) << r.n;
  for (std::size_t i = 2; i < rows.size(); ++i) {
    auto second = [&](auto field) {
      auto v = [&](std::size_t k) { return static_cast<std::int64_t>(rows[k].route_cost.*field); };
      return v(i) - 2 * v(i - 1) + v(i - 2);
    };
    EXPECT_EQ(second(&CostMeter::signature_verifications), 0) << rows[i].n;
    EXPECT_EQ(second(&CostMeter::merkle_leaves_hashed), 0) << rows[i].n;
  }
}

TEST(Sweep, LeaderWithholdingPremiumIsConstant) {
  auto ns = std::vector<std::size_t>{3, 5, 10, 20, 32};
  auto lw = sweep(shipped("leader-withholding"), ns);
  auto base = sweep(shipped("baseline"), ns);
  std::optional<std::array<std::uint64_t, 5>> premium;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ASSERT_TRUE(lw[i].ok);
    auto a = lw[i].route_cost.values(), b = base[i].route_cost.values();
    std::array<std::uint64_t, 5> d{};
    for (std::size_t c = 0; c < d.size(); ++c) d[c] = a[c] - b[c];
    if (premium)
      EXPECT_EQ(d, *premium) << ns[i];
    else
      premium = d;
  }
}

TEST(Sweep, CsvHasHeaderAndOneRowPerN) {
  auto rows = sweep(shipped("baseline"), std::vector<std::size_t>{4, 3});
  auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.rfind("n,transactions,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\n4,"), std::string::npos);
}

TEST(Griefing, GrieferIsBoundedAndUnpunished) {
  auto s = shipped("griefing");
  std::vector<double> ratios;
  for (std::size_t n : {3, 10, 20, 32}) {
    s.operators = n;
    auto rep = griefing_report(s);
    SCOPED_TRACE(n);
    EXPECT_FALSE(rep.griefer_slashed);
    EXPECT_EQ(rep.griefer_deposit_after, rep.griefer_deposit_before);
    EXPECT_EQ(rep.griefer_on_chain_submissions, 1u);
    EXPECT_EQ(rep.griefer_off_chain_reveals, 0u);
    EXPECT_TRUE(rep.same_output);
    EXPECT_EQ(rep.griefer_cost.transactions, 1u);
    ratios.push_back(rep.ratio);
  }
  EXPECT_TRUE(std::is_sorted(ratios.begin(), ratios.end()));
  EXPECT_LT(ratios.front(), ratios.back());
}

TEST(Griefing, NeedsExactlyOneGriefer) {
  EXPECT_THROW(griefing_report(shipped("baseline")), ProtocolError);
}

TEST(OnChain, ModeFinalizesWithoutLeader) {
  auto t = run(shipped("onchain-baseline"));
  EXPECT_TRUE(t.ok());
  ASSERT_EQ(t.outputs.size(), 2u);
  for (const auto& e : t.events)
    if (e.kind == EventKind::Call) EXPECT_NE(e.actor, "leader");
}

}  // namespace
}  // namespace cr2
