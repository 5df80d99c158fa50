#include "cr2/simulator.hpp"

#include "cr2/beacon_math.hpp"

#include "json.hpp"

#include <algorithm>
#include <future>
#include <sstream>

namespace cr2 {

using nlohmann::json;

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Call: return "call";
    case EventKind::Send: return "send";
    case EventKind::Deliver: return "deliver";
    case EventKind::Output: return "output";
  }
  return "?";
}

namespace {

json meter_json(const CostMeter& m) {
  json j = json::object();
  auto values = m.values();
  for (std::size_t i = 0; i < values.size(); ++i) j[std::string(CostMeter::kCounterNames[i])] = values[i];
  j["work"] = m.work();
  return j;
}

struct Pending {
  Tick deliver_at;
  std::uint64_t seq;
  OffChainMessage msg;
};

class Engine {
 public:
  explicit Engine(const Scenario& s) : s_(s), ledger_(make_ledger(s)), consumer_(make_consumer(s)), leader_(leader_address(s), s.leader) {
    auto policies = s.policies();
    const std::size_t total = s.operators + s.standby;
    for (std::size_t i = 0; i < total; ++i) {
      bool standby = i >= s.operators;
      auto key = SigningKey::derive("cr2-sim/" + std::to_string(s.seed) + "/operator/" + std::to_string(i));
      operators_.emplace_back(std::move(key), standby ? OperatorPolicy::Honest : policies[i], s.seed, i, standby,
                              s.min_deposit);
      name(operators_.back().address(), "op" + std::to_string(i));
    }
    name(leader_.address(), "leader");
    name(consumer_.address(), "consumer");
    t_.scenario = s.name;
    t_.seed = s.seed;
    t_.mode = s.mode;
    t_.operators = s.operators;
    t_.expected_route = s.expected_route;
  }

  Transcript run() {
    for (auto& op : operators_)
      if (!op.is_standby()) op.activate(ledger_);
    drain_log();

    ActorContext ctx{ledger_, [this](OffChainMessage m) { send(std::move(m)); }};
    for (Tick now = 0;; ++now) {
      if (now > s_.tick_budget)
        throw ProtocolError(Errc::LivenessTimeout, s_.name + ": no completion within " + std::to_string(s_.tick_budget) + " ticks");
      ledger_.set_time(now);
      deliver(now);
      consumer_.step(ctx);
      after_step();
      leader_.step(ctx);
      after_step();
      for (auto& op : operators_) {
        op.step(ctx);
        after_step();
      }
      if (consumer_.done(ledger_)) {
        t_.ticks = now;
        break;
      }
    }
    finish();
    return std::move(t_);
  }

 private:
  static Address leader_address(const Scenario& s) {
    return SigningKey::derive("cr2-sim/" + std::to_string(s.seed) + "/leader").address();
  }

  static Ledger make_ledger(const Scenario& s) {
    LedgerConfig c;
    c.mode = s.mode;
    c.leader = leader_address(s);
    c.min_deposit = s.min_deposit;
    c.timing = s.timing;
    c.leader_bonus_shares = s.leader_bonus_shares;
    c.last_revealer_reward_bps = s.last_revealer_reward_bps;
    return Ledger(c, s.min_deposit);
  }

  static ConsumerActor make_consumer(const Scenario& s) {
    return ConsumerActor(address_from_u64(0xC0B5'0000'0000ull + s.seed), s.rounds, s.fee, s.refund_on_halt);
  }

  void name(const Address& a, std::string n) {
    t_.names[a] = n;
    t_.addresses[n] = a;
  }

  const std::string& name_of(const Address& a) {
    auto it = t_.names.find(a);
    if (it == t_.names.end()) it = t_.names.emplace(a, a.hex()).first;
    return it->second;
  }

  Event& push(EventKind kind, std::string event_name) {
    Event e;
    e.tick = ledger_.now();
    e.seq = seq_++;
    e.kind = kind;
    e.name = std::move(event_name);
    t_.events.push_back(std::move(e));
    return t_.events.back();
  }

  void send(OffChainMessage m) {
    drain_log();
    auto& e = push(EventKind::Send, std::string(to_string(m.kind)));
    e.actor = name_of(m.sender);
    e.peer = name_of(m.recipient);
    e.round = m.round;
    e.attempt = m.attempt;
    queue_.push_back(Pending{ledger_.now() + s_.latency, e.seq, std::move(m)});
  }

  void deliver(Tick now) {
    auto due = std::stable_partition(queue_.begin(), queue_.end(), [&](const Pending& p) { return p.deliver_at <= now; });
    std::vector<Pending> ready(std::make_move_iterator(queue_.begin()), std::make_move_iterator(due));
    queue_.erase(queue_.begin(), due);
    std::sort(ready.begin(), ready.end(), [](const Pending& a, const Pending& b) { return a.seq < b.seq; });
    for (auto& p : ready) {
      auto& e = push(EventKind::Deliver, std::string(to_string(p.msg.kind)));
      e.actor = name_of(p.msg.sender);
      e.peer = name_of(p.msg.recipient);
      e.round = p.msg.round;
      e.attempt = p.msg.attempt;
      if (p.msg.recipient == leader_.address()) {
        leader_.deliver(p.msg);
        continue;
      }
      for (auto& op : operators_)
        if (op.address() == p.msg.recipient) op.deliver(p.msg);
    }
  }

  void drain_log() {
    const auto& log = ledger_.log();
    for (; logged_ < log.size(); ++logged_) {
      const auto& rec = log[logged_];
      auto& e = push(EventKind::Call, rec.name);
      e.actor = name_of(rec.caller);
      e.round = rec.round;
      e.attempt = rec.attempt;
      e.ok = rec.ok;
      e.error = rec.error;
      e.meter = rec.delta;
      if (rec.ok && rec.round) {
        const auto& r = ledger_.round(*rec.round);
        if (r.phase == Phase::Finalized && !t_.outputs.contains(r.id)) {
          t_.outputs[r.id] = *r.output;
          auto& out = push(EventKind::Output, "omegaO");
          out.round = r.id;
          out.attempt = r.attempt_id;
          out.value = r.output;
        }
      }
    }
  }

  void after_step() {
    drain_log();
    auto f = ledger_.funds();
    if (!f.conserved() && !conservation_reported_) {
      conservation_reported_ = true;
      t_.violations.push_back("fund conservation broken at tick " + std::to_string(ledger_.now()) + ": internal " +
                              std::to_string(f.total_internal()) + " vs inflow " + std::to_string(f.external_inflow));
    }
  }

  void finish() {
    for (const auto& rec : ledger_.log()) {
      if (!rec.ok || !rec.round || rec.name == "requestRandomNumber") continue;
      t_.routes[*rec.round].push_back(rec.name);
      t_.route_totals[*rec.round] += rec.delta;
    }
    t_.meter_total = ledger_.meter();

    for (RoundId id = 0; id < ledger_.round_count(); ++id) {
      const auto& r = ledger_.round(id);
      if (r.phase != Phase::Finalized) continue;
      std::vector<Bytes32> secrets;
      for (const auto& s : r.secret) secrets.push_back(*s);
      if (evaluate_round(secrets).omega_o != *r.output)
        t_.violations.push_back("round " + std::to_string(id) + " output is not the hash of its secrets");
    }
    if (s_.leader.policy == LeaderPolicy::Honest) {
      for (const auto& rec : ledger_.log())
        if (!rec.ok && rec.caller == leader_.address() &&
            (rec.error == Errc::SignatureRequired || rec.error == Errc::RootMismatch))
          t_.violations.push_back("honest leader call " + rec.name + " reverted with " +
                                  std::string(to_string(*rec.error)));
    }
    for (const auto& op : operators_) {
      if (op.policy() != OperatorPolicy::LateOnChainGriefer) continue;
      if (ledger_.deposit_of(op.address()) != s_.min_deposit)
        t_.violations.push_back("griefer " + name_of(op.address()) + " lost its deposit");
    }
    t_.ledger = std::make_shared<const Ledger>(ledger_);
  }

  const Scenario& s_;
  Ledger ledger_;
  ConsumerActor consumer_;
  LeaderActor leader_;
  std::vector<OperatorActor> operators_;
  std::vector<Pending> queue_;
  Transcript t_;
  std::uint64_t seq_ = 0;
  std::size_t logged_ = 0;
  bool conservation_reported_ = false;
};

}  // namespace

bool Transcript::route_matches() const {
  if (!expected_route) return true;
  auto it = routes.find(0);
  return it != routes.end() && it->second == *expected_route;
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    json j = {{"tick", e.tick}, {"seq", e.seq}, {"event", to_string(e.kind)}, {"name", e.name}};
    if (!e.actor.empty()) j["actor"] = e.actor;
    if (!e.peer.empty()) j["to"] = e.peer;
    if (e.round) {
      j["round"] = *e.round;
      j["attempt"] = e.attempt;
    }
    if (e.kind == EventKind::Call) {
      j["ok"] = e.ok;
      if (e.error) j["error"] = to_string(*e.error);
      j["meter"] = meter_json(e.meter);
    }
    if (e.value) j["value"] = e.value->hex();
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string Transcript::summary_json() const {
  json routes_json = json::object();
  for (const auto& [id, names] : routes) routes_json[std::to_string(id)] = names;
  json totals = json::object();
  for (const auto& [id, m] : route_totals) totals[std::to_string(id)] = meter_json(m);
  json outs = json::object();
  for (const auto& [id, d] : outputs) outs[std::to_string(id)] = d.hex();
  auto f = ledger->funds();
  json j = {
      {"scenario", scenario},
      {"seed", seed},
      {"mode", to_string(mode)},
      {"operators", operators},
      {"ticks", ticks},
      {"routes", routes_json},
      {"routeTotals", totals},
      {"outputs", outs},
      {"meterTotal", meter_json(meter_total)},
      {"funds",
       {{"internal", f.total_internal()}, {"externalInflow", f.external_inflow}, {"conserved", f.conserved()}}},
      {"violations", violations},
      {"ok", ok()},
  };
  if (expected_route) {
    j["expectedRoute"] = *expected_route;
    j["routeMatches"] = route_matches();
  }
  return j.dump(2) + "\n";
}

std::string Transcript::summary_text() const {
  std::ostringstream out;
  out << "scenario   " << scenario << " (seed " << seed << ", " << to_string(mode) << ", n=" << operators << ")\n";
  out << "ticks      " << ticks << "\n";
  for (const auto& [id, names] : routes) {
    out << "route[" << id << "]  ";
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? " -> " : "") << names[i];
    out << "\n";
  }
  if (expected_route) out << "expected   " << (route_matches() ? "match" : "MISMATCH") << "\n";
  for (const auto& [id, d] : outputs) out << "omega_o[" << id << "] " << d.hex() << "\n";
  auto f = ledger->funds();
  out << "funds      internal " << f.total_internal() << " / inflow " << f.external_inflow
      << (f.conserved() ? " (conserved)" : " (BROKEN)") << "\n";
  out << "work       " << meter_total.work() << "\n";
  for (const auto& v : violations) out << "violation  " << v << "\n";
  return out.str();
}

Transcript run(const Scenario& scenario) {
  scenario.validate();
  return Engine(scenario).run();
}

std::vector<SweepRow> sweep(const Scenario& scenario, std::span<const std::size_t> ns) {
  std::vector<std::future<SweepRow>> jobs;
  for (auto n : ns) {
    Scenario s = scenario;
    s.operators = n;
    jobs.push_back(std::async(std::launch::async, [s = std::move(s)] {
      auto t = run(s);
      SweepRow row;
      row.n = s.operators;
      row.route = t.routes[0];
      row.route_cost = t.route_totals[0];
      row.total = t.meter_total;
      row.ok = t.ok();
      return row;
    }));
  }
  std::vector<SweepRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "n";
  for (auto name : CostMeter::kCounterNames) out << "," << name;
  out << ",work,totalWork,ok,route\n";
  for (const auto& r : rows) {
    out << r.n;
    for (auto v : r.route_cost.values()) out << "," << v;
    out << "," << r.route_cost.work() << "," << r.total.work() << "," << (r.ok ? 1 : 0) << ",";
    for (std::size_t i = 0; i < r.route.size(); ++i) out << (i ? ";" : "") << r.route[i];
    out << "\n";
  }
  return out.str();
}

GriefingReport griefing_report(const Scenario& scenario) {
  auto policies = scenario.policies();
  auto griefers = std::count(policies.begin(), policies.end(), OperatorPolicy::LateOnChainGriefer);
  if (griefers != 1) throw ProtocolError(Errc::InvalidScenario, "griefing report needs exactly one late on-chain griefer");
  std::size_t gidx = std::find(policies.begin(), policies.end(), OperatorPolicy::LateOnChainGriefer) - policies.begin();
  if (std::count(policies.begin(), policies.end(), OperatorPolicy::Honest) != static_cast<long>(policies.size()) - 1)
    throw ProtocolError(Errc::InvalidScenario, "griefing report needs every other operator honest");

  auto t = run(scenario);
  const std::string gname = "op" + std::to_string(gidx);
  const Address griefer = t.addresses.at(gname);

  GriefingReport rep;
  rep.n = scenario.operators;
  rep.griefer_deposit_before = scenario.min_deposit;
  rep.griefer_deposit_after = t.ledger->deposit_of(griefer);
  rep.griefer_slashed = !t.ledger->find_operator(griefer)->active;
  for (const auto& e : t.events) {
    if (e.round != 0u) continue;
    if (e.kind == EventKind::Send && e.name == "RevealS" && e.actor == gname) ++rep.griefer_off_chain_reveals;
    if (e.kind != EventKind::Call || !e.ok) continue;
    if (e.name == "requestToSubmitS" && e.actor == "leader") rep.leader_cost += e.meter;
    if (e.name == "submitS" && e.actor == gname) {
      rep.griefer_cost += e.meter;
      ++rep.griefer_on_chain_submissions;
    }
  }
  rep.leader_work = rep.leader_cost.work();
  rep.griefer_work = rep.griefer_cost.work();
  rep.ratio = rep.griefer_work ? static_cast<double>(rep.leader_work) / static_cast<double>(rep.griefer_work) : 0.0;
  if (t.outputs.contains(0)) rep.output = t.outputs.at(0);

  Scenario honest = scenario;
  honest.faults.clear();
  honest.expected_route.reset();
  auto h = run(honest);
  if (h.outputs.contains(0)) rep.honest_output = h.outputs.at(0);
  rep.same_output = t.outputs.contains(0) && h.outputs.contains(0) && rep.output == rep.honest_output;
  return rep;
}

std::string griefing_json(std::span<const GriefingReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back({{"n", r.n},
                   {"leaderCost", meter_json(r.leader_cost)},
                   {"grieferCost", meter_json(r.griefer_cost)},
                   {"ratio", r.ratio},
                   {"grieferSlashed", r.griefer_slashed},
                   {"grieferDepositBefore", r.griefer_deposit_before},
                   {"grieferDepositAfter", r.griefer_deposit_after},
                   {"grieferOffChainReveals", r.griefer_off_chain_reveals},
                   {"grieferOnChainSubmissions", r.griefer_on_chain_submissions},
                   {"output", r.output.hex()},
                   {"honestOutput", r.honest_output.hex()},
                   {"sameOutput", r.same_output}});
  }
  return arr.dump(2) + "\n";
}

std::string griefing_text(std::span<const GriefingReport> reports) {
  std::ostringstream out;
  out << "    n  leaderWork  grieferWork   ratio  slashed  sameOutput\n";
  for (const auto& r : reports) {
    char line[128];
    std::snprintf(line, sizeof line, "%5zu  %10llu  %11llu  %6.2f  %7s  %10s\n", r.n,
                  static_cast<unsigned long long>(r.leader_work), static_cast<unsigned long long>(r.griefer_work),
                  r.ratio, r.griefer_slashed ? "yes" : "no", r.same_output ? "yes" : "no");
    out << line;
  }
  return out.str();
}

}  // namespace cr2
