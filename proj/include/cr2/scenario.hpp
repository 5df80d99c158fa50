#pragma once

#include "cr2/actors.hpp"
#include "cr2/ledger.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cr2 {

struct FaultSpec {
  std::size_t index = 0;
  OperatorPolicy policy = OperatorPolicy::Honest;
};

/// Declarative run description; mirrors the JSON scenario files. Operators
/// not listed in `faults` are honest, so a script stays valid when `operators`
/// is swept.
struct Scenario {
  std::string name = "unnamed";
  std::uint64_t seed = 1;
  Mode mode = Mode::Hybrid;
  std::size_t operators = 3;
  std::vector<FaultSpec> faults;
  /// Honest operators that register only when the service halts for lack of
  /// operators.
  std::size_t standby = 0;

  LeaderOptions leader;
  Timing timing;
  Tick latency = 1;

  std::size_t rounds = 1;
  Funds min_deposit = 1000;
  Funds fee = 10;
  std::uint32_t leader_bonus_shares = 1;
  std::uint32_t last_revealer_reward_bps = 0;
  bool refund_on_halt = false;
  Tick tick_budget = 100000;

  /// Successful ledger calls of round 0, in order.
  std::optional<std::vector<std::string>> expected_route;

  std::vector<OperatorPolicy> policies() const;
  /// Throws InvalidScenario.
  void validate() const;

  static Scenario from_json(std::string_view text);
  static Scenario load(const std::filesystem::path& path);
  std::string to_json() const;
};

}  // namespace cr2
