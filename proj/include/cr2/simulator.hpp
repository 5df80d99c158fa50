#pragma once

#include "cr2/scenario.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cr2 {

enum class EventKind { Call, Send, Deliver, Output };

std::string_view to_string(EventKind k) noexcept;

struct Event {
  Tick tick = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Call;
  std::string name;
  std::string actor;
  /// Recipient of a message.
  std::string peer;
  std::optional<RoundId> round;
  std::uint64_t attempt = 0;
  bool ok = true;
  std::optional<Errc> error;
  CostMeter meter;
  /// The output of an Output event.
  std::optional<Digest32> value;
};

struct Transcript {
  std::string scenario;
  std::uint64_t seed = 0;
  Mode mode = Mode::Hybrid;
  std::size_t operators = 0;
  Tick ticks = 0;

  /// Ordered by (tick, seq).
  std::vector<Event> events;
  std::map<RoundId, Digest32> outputs;
  /// Successful ledger calls per round, retries included, requests excluded.
  std::map<RoundId, std::vector<std::string>> routes;
  std::map<RoundId, CostMeter> route_totals;
  CostMeter meter_total;
  std::optional<std::vector<std::string>> expected_route;
  /// Invariant breaches found while running; empty on a clean run.
  std::vector<std::string> violations;

  std::map<Address, std::string> names;
  std::map<std::string, Address> addresses;
  /// Final ledger state, for inspection.
  std::shared_ptr<const Ledger> ledger;

  bool route_matches() const;
  bool ok() const { return violations.empty() && route_matches(); }

  std::string to_jsonl() const;
  std::string summary_json() const;
  std::string summary_text() const;
};

/// Runs a scenario to completion. Throws LivenessTimeout when the tick
/// budget runs out and InvalidScenario for a bad script.
Transcript run(const Scenario& scenario);

struct SweepRow {
  std::size_t n = 0;
  std::vector<std::string> route;
  /// Cost of round 0's route.
  CostMeter route_cost;
  CostMeter total;
  bool ok = false;
};

/// Runs the template once per n (in parallel), rows in input order.
std::vector<SweepRow> sweep(const Scenario& scenario, std::span<const std::size_t> ns);
std::string sweep_csv(std::span<const SweepRow> rows);

struct GriefingReport {
  std::size_t n = 0;
  CostMeter leader_cost;
  CostMeter griefer_cost;
  std::uint64_t leader_work = 0;
  std::uint64_t griefer_work = 0;
  double ratio = 0;
  bool griefer_slashed = false;
  Funds griefer_deposit_before = 0;
  Funds griefer_deposit_after = 0;
  std::size_t griefer_off_chain_reveals = 0;
  std::size_t griefer_on_chain_submissions = 0;
  Digest32 output;
  /// Output of the same script with the griefer replaced by an honest operator.
  Digest32 honest_output;
  bool same_output = false;
};

/// Requires exactly one LateOnChainGriefer (InvalidScenario otherwise).
GriefingReport griefing_report(const Scenario& scenario);
std::string griefing_json(std::span<const GriefingReport> reports);
std::string griefing_text(std::span<const GriefingReport> reports);

}  // namespace cr2
