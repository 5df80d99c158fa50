#include "cr2/scenario.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace cr2 {

using nlohmann::json;

std::vector<OperatorPolicy> Scenario::policies() const {
  std::vector<OperatorPolicy> out(operators, OperatorPolicy::Honest);
  for (const auto& f : faults)
    if (f.index < operators) out[f.index] = f.policy;
  return out;
}

void Scenario::validate() const {
  auto fail = [&](const std::string& why) { throw ProtocolError(Errc::InvalidScenario, name + ": " + why); };
  if (operators < 2) fail("at least two operators are required");
  for (const auto& f : faults)
    if (f.index >= operators) fail("fault index " + std::to_string(f.index) + " out of range");
  if (rounds == 0) fail("rounds must be positive");
  if (latency == 0) fail("latency must be at least one tick");
  if (fee == 0) fail("fee must be positive");
  if (last_revealer_reward_bps > 10000) fail("lastRevealerRewardBps above 10000");
  const auto& t = timing;
  if (t.off_chain_phase_timeout == 0 || t.merkle_root_submission_period == 0 || t.on_chain_submission_period == 0 ||
      t.request_or_generate_period == 0 || t.off_chain_reveal_slot == 0)
    fail("window lengths must be positive");
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

Scenario Scenario::from_json(std::string_view text) {
  Scenario s;
  try {
    auto j = json::parse(text);
    read(j, "name", s.name);
    read(j, "seed", s.seed);
    if (j.contains("mode")) {
      auto m = j["mode"].get<std::string>();
      if (m == "hybrid")
        s.mode = Mode::Hybrid;
      else if (m == "onchain")
        s.mode = Mode::OnChain;
      else
        throw ProtocolError(Errc::InvalidScenario, "unknown mode '" + m + "'");
    }
    read(j, "operators", s.operators);
    read(j, "standby", s.standby);
    for (const auto& f : j.value("faults", json::array()))
      s.faults.push_back({f.at("index").get<std::size_t>(), parse_operator_policy(f.at("policy").get<std::string>())});

    if (auto l = j.find("leader"); l != j.end()) {
      if (l->contains("policy")) s.leader.policy = parse_leader_policy((*l)["policy"].get<std::string>());
      read(*l, "faultCount", s.leader.fault_count);
      read(*l, "resumeAfterHalt", s.leader.resume_after_halt);
      read(*l, "resumeDelay", s.leader.resume_delay);
    }
    if (auto t = j.find("timing"); t != j.end()) {
      read(*t, "offChainPhaseTimeout", s.timing.off_chain_phase_timeout);
      read(*t, "merkleRootSubmissionPeriod", s.timing.merkle_root_submission_period);
      read(*t, "onChainSubmissionPeriod", s.timing.on_chain_submission_period);
      read(*t, "requestOrGeneratePeriod", s.timing.request_or_generate_period);
      read(*t, "offChainRevealSlot", s.timing.off_chain_reveal_slot);
      read(*t, "latency", s.latency);
    }
    read(j, "rounds", s.rounds);
    read(j, "minDeposit", s.min_deposit);
    read(j, "fee", s.fee);
    read(j, "leaderBonusShares", s.leader_bonus_shares);
    read(j, "lastRevealerRewardBps", s.last_revealer_reward_bps);
    read(j, "refundOnHalt", s.refund_on_halt);
    read(j, "tickBudget", s.tick_budget);
    if (j.contains("expectedRoute")) s.expected_route = j["expectedRoute"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ProtocolError(Errc::InvalidScenario, e.what());
  }
  s.leader.latency = s.latency;
  s.validate();
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProtocolError(Errc::InvalidScenario, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string Scenario::to_json() const {
  json faults_json = json::array();
  for (const auto& f : faults) faults_json.push_back({{"index", f.index}, {"policy", to_string(f.policy)}});
  json j = {
      {"name", name},
      {"seed", seed},
      {"mode", to_string(mode)},
      {"operators", operators},
      {"standby", standby},
      {"faults", faults_json},
      {"leader",
       {{"policy", to_string(leader.policy)},
        {"faultCount", leader.fault_count},
        {"resumeAfterHalt", leader.resume_after_halt},
        {"resumeDelay", leader.resume_delay}}},
      {"timing",
       {{"offChainPhaseTimeout", timing.off_chain_phase_timeout},
        {"merkleRootSubmissionPeriod", timing.merkle_root_submission_period},
        {"onChainSubmissionPeriod", timing.on_chain_submission_period},
        {"requestOrGeneratePeriod", timing.request_or_generate_period},
        {"offChainRevealSlot", timing.off_chain_reveal_slot},
        {"latency", latency}}},
      {"rounds", rounds},
      {"minDeposit", min_deposit},
      {"fee", fee},
      {"leaderBonusShares", leader_bonus_shares},
      {"lastRevealerRewardBps", last_revealer_reward_bps},
      {"refundOnHalt", refund_on_halt},
      {"tickBudget", tick_budget},
  };
  if (expected_route) j["expectedRoute"] = *expected_route;
  return j.dump(2);
}

}  // namespace cr2
