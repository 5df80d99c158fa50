#include "cr2/analysis.hpp"

#include "cr2/beacon_math.hpp"
#include "cr2/commitment.hpp"
#include "cr2/keccak.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace cr2 {

using nlohmann::json;

namespace {

Bytes32 draw(std::mt19937_64& rng) {
  Bytes32 s;
  for (std::size_t i = 0; i < 32; i += 8) {
    auto word = rng();
    for (std::size_t j = 0; j < 8; ++j) s.bytes[i + j] = static_cast<std::uint8_t>(word >> (56 - 8 * j));
  }
  return s;
}

void require(bool ok, const char* what) {
  if (!ok) throw ProtocolError(Errc::InvalidArgument, what);
}

}  // namespace

HonestRounds::HonestRounds(std::size_t n, std::uint64_t seed) : n_(n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n), 0xB1A5u};
  rng_.seed(seq);
}

std::vector<Bytes32> HonestRounds::next() {
  std::vector<Bytes32> out(n_);
  for (auto& s : out) s = draw(rng_);
  return out;
}

BitBiasReport bias_test(std::size_t rounds, std::size_t n, std::uint64_t seed) {
  require(rounds > 0, "bias test needs at least one round");
  require(n >= 2, "bias test needs at least two operators");
  std::array<std::size_t, 256> ones{};
  HonestRounds source(n, seed);
  for (std::size_t r = 0; r < rounds; ++r) {
    auto out = evaluate_round(source.next()).omega_o;
    for (std::size_t bit = 0; bit < 256; ++bit) ones[bit] += (out.bytes[bit / 8] >> (7 - bit % 8)) & 1u;
  }
  BitBiasReport rep;
  rep.n = n;
  rep.seed = seed;
  rep.samples = rounds;
  for (std::size_t bit = 0; bit < 256; ++bit) {
    rep.frequency[bit] = static_cast<double>(ones[bit]) / static_cast<double>(rounds);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(rep.frequency[bit] - 0.5));
  }
  return rep;
}

PositionReport position_test(std::size_t rounds, std::size_t n, std::uint64_t seed) {
  require(rounds > 0 && n >= 2, "position test needs rounds and at least two operators");
  std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(n, 0));
  HonestRounds source(n, seed);
  for (std::size_t r = 0; r < rounds; ++r) {
    auto order = evaluate_round(source.next()).order;
    for (std::size_t p = 0; p < n; ++p) ++counts[order.permutation[p]][p];
  }
  PositionReport rep;
  rep.n = n;
  rep.rounds = rounds;
  rep.matrix.assign(n, std::vector<double>(n, 0.0));
  const double uniform = 1.0 / static_cast<double>(n);
  std::vector<double> column(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t p = 0; p < n; ++p) {
      double f = static_cast<double>(counts[i][p]) / static_cast<double>(rounds);
      rep.matrix[i][p] = f;
      row += f;
      column[p] += f;
      rep.max_cell_deviation = std::max(rep.max_cell_deviation, std::abs(f - uniform));
    }
    rep.max_row_error = std::max(rep.max_row_error, std::abs(row - 1.0));
  }
  for (double c : column) rep.max_column_error = std::max(rep.max_column_error, std::abs(c - 1.0));
  return rep;
}

double last_position_test(std::size_t rounds, std::size_t n, std::size_t k, std::uint64_t seed) {
  require(rounds > 0 && n >= 2, "position test needs rounds and at least two operators");
  require(k < n, "adversary must be smaller than the operator set");
  std::size_t hits = 0;
  HonestRounds source(n, seed);
  for (std::size_t r = 0; r < rounds; ++r)
    if (evaluate_round(source.next()).order.last() < k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(rounds);
}

namespace {

/// Replays one trial on an on-chain ledger: the adversary commits to
/// `committed`, then tries to open with each of `alternatives`.
void post_commit_replay(std::span<const Bytes32> secrets, std::size_t adversary, std::span<const Bytes32> alternatives,
                        GrindReport& rep) {
  const std::size_t n = secrets.size();
  LedgerConfig cfg;
  cfg.mode = Mode::OnChain;
  cfg.leader = address_from_u64(0x1EAD);
  Ledger ledger(cfg, cfg.min_deposit);
  std::vector<Address> ops;
  for (std::size_t i = 0; i < n; ++i) {
    ops.push_back(address_from_u64(0xA000 + i));
    ledger.deposit_and_activate(ops.back(), cfg.min_deposit);
  }
  auto round = ledger.request_random_number(address_from_u64(0xC0), cfg.min_fee);
  std::vector<CommitmentChain> chains;
  for (const auto& s : secrets) chains.push_back(derive_chain(s));
  for (std::size_t i = 0; i < n; ++i) ledger.submit_cv(ops[i], round, chains[i].outer);

  auto try_swap = [&](auto&& call) {
    ++rep.post_commit_attempts;
    try {
      call();
    } catch (const ProtocolError& e) {
      if (e.code() == Errc::CommitmentMismatch) ++rep.post_commit_rejected;
    }
  };
  for (const auto& alt : alternatives)
    try_swap([&] { ledger.submit_co(ops[adversary], round, derive_chain(alt).inner); });
  for (std::size_t i = 0; i < n; ++i) ledger.submit_co(ops[i], round, chains[i].inner);

  const auto& st = ledger.round(round);
  std::vector<Digest32> cvs;
  for (const auto& c : chains) cvs.push_back(c.outer);
  auto order = reveal_order(order_keys(*st.omega_v, cvs));
  ledger.submit_reveal_order(ops[order.permutation.front()], round, order);
  for (auto idx : order.permutation) {
    if (idx == adversary)
      for (const auto& alt : alternatives) try_swap([&] { ledger.submit_s(ops[adversary], round, alt); });
    ledger.submit_s(ops[idx], round, secrets[idx]);
  }
  if (order != evaluate_round(secrets).order || ledger.round(round).output != omega_o(secrets))
    ++rep.post_commit_order_changes;
}

}  // namespace

GrindReport grind_resistance_probe(std::size_t trials, std::size_t n, std::size_t budget, std::size_t adversary,
                                   std::uint64_t seed, std::size_t post_commit_trials) {
  require(trials > 0 && n >= 2 && budget >= 1 && adversary < n, "grind probe arguments");
  GrindReport rep;
  rep.trials = trials;
  rep.n = n;
  rep.budget = budget;
  rep.adversary = adversary;
  rep.expected = 1.0 - std::pow(1.0 - 1.0 / static_cast<double>(n), static_cast<double>(budget));

  HonestRounds source(n, seed);
  std::mt19937_64 adversary_rng(seed ^ 0x6121D5EEDull);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto secrets = source.next();
    std::vector<Bytes32> tried;
    bool last = false;
    for (std::size_t b = 0; b < budget && !last; ++b) {
      secrets[adversary] = draw(adversary_rng);
      tried.push_back(secrets[adversary]);
      last = evaluate_round(secrets).order.last() == adversary;
    }
    if (last) ++hits;
    if (t < post_commit_trials) {
      std::vector<Bytes32> alternatives(tried.begin(), tried.end() - 1);
      alternatives.push_back(draw(adversary_rng));
      post_commit_replay(secrets, adversary, alternatives, rep);
    }
  }
  rep.last_frequency = static_cast<double>(hits) / static_cast<double>(trials);
  return rep;
}

LinearFit fit_line(std::span<const std::int64_t> x, std::span<const std::int64_t> y) {
  if (x.size() != y.size()) throw ProtocolError(Errc::InvalidArgument, "x and y differ in length");
  std::set<std::int64_t> distinct(x.begin(), x.end());
  if (distinct.size() < 3) throw ProtocolError(Errc::NotEnoughPoints, "need at least three distinct n values");

  const double m = static_cast<double>(x.size());
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  long double mx = sx / m, my = sy / m, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = static_cast<double>(sxy / sxx);
  fit.intercept = static_cast<double>(my - sxy / sxx * mx);

  // Exact collinearity check on the integers, against the first two distinct x.
  std::size_t a = 0, b = 1;
  while (b < x.size() && x[b] == x[a]) ++b;
  fit.exact = true;
  for (std::size_t i = 0; i < x.size() && fit.exact; ++i)
    fit.exact = (y[i] - y[a]) * (x[b] - x[a]) == (y[b] - y[a]) * (x[i] - x[a]);

  if (fit.exact) {
    fit.r2 = 1.0;
  } else {
    long double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      long double e = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += e * e;
    }
    fit.r2 = syy == 0 ? 0.0 : static_cast<double>(1.0L - ss_res / syy);
  }
  return fit;
}

std::vector<CounterFit> cost_report(std::span<const SweepRow> rows) {
  std::vector<std::int64_t> x;
  for (const auto& r : rows) x.push_back(static_cast<std::int64_t>(r.n));
  std::vector<CounterFit> out;
  for (std::size_t c = 0; c <= CostMeter::kCounterNames.size(); ++c) {
    std::vector<std::int64_t> y;
    for (const auto& r : rows) {
      auto v = c < CostMeter::kCounterNames.size() ? r.route_cost.values()[c] : r.route_cost.work();
      y.push_back(static_cast<std::int64_t>(v));
    }
    std::string name = c < CostMeter::kCounterNames.size() ? std::string(CostMeter::kCounterNames[c]) : "work";
    out.push_back({name, fit_line(x, y)});
  }
  return out;
}

std::string bias_json(std::span<const BitBiasReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back({{"n", r.n},
                   {"seed", r.seed},
                   {"samples", r.samples},
                   {"maxDeviation", r.max_deviation},
                   {"frequency", std::vector<double>(r.frequency.begin(), r.frequency.end())}});
  }
  return arr.dump(2) + "\n";
}

std::string bias_text(std::span<const BitBiasReport> reports, double tolerance) {
  std::ostringstream out;
  out << " seed      n  samples  maxDeviation  result\n";
  for (const auto& r : reports) {
    char line[128];
    std::snprintf(line, sizeof line, "%5llu  %5zu  %7zu  %12.5f  %s\n", static_cast<unsigned long long>(r.seed), r.n,
                  r.samples, r.max_deviation, r.within(tolerance) ? "pass" : "FAIL");
    out << line;
  }
  return out.str();
}

std::string cost_report_csv(std::span<const CounterFit> fits) {
  std::ostringstream out;
  out.precision(10);
  out << "counter,slope,intercept,r2,exact\n";
  for (const auto& f : fits)
    out << f.counter << "," << f.fit.slope << "," << f.fit.intercept << "," << f.fit.r2 << "," << (f.fit.exact ? 1 : 0)
        << "\n";
  return out.str();
}

std::string cost_report_json(std::span<const CounterFit> fits) {
  json arr = json::array();
  for (const auto& f : fits)
    arr.push_back({{"counter", f.counter},
                   {"slope", f.fit.slope},
                   {"intercept", f.fit.intercept},
                   {"r2", f.fit.r2},
                   {"exact", f.fit.exact}});
  return arr.dump(2) + "\n";
}

std::string cost_report_text(std::span<const CounterFit> fits) {
  std::ostringstream out;
  out << "counter                     slope     intercept        r2\n";
  for (const auto& f : fits) {
    char line[128];
    std::snprintf(line, sizeof line, "%-22s  %10.3f  %12.3f  %8.6f%s\n", f.counter.c_str(), f.fit.slope,
                  f.fit.intercept, f.fit.r2, f.fit.exact ? "  exact" : "");
    out << line;
  }
  return out.str();
}

}  // namespace cr2
