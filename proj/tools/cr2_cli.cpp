#include "cr2/analysis.hpp"
#include "cr2/simulator.hpp"
#include "cr2/vectors.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>

namespace {

using namespace cr2;

constexpr int kOk = 0;
constexpr int kAssertion = 1;
constexpr int kUsage = 2;

/// Bit means must stay within this distance of 1/2 (4 sigma at 10^4 rounds).
constexpr double kBiasTolerance = 0.02;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string n;
  std::optional<std::size_t> rounds;
  std::string out = "cr2-out";
  std::string format;
  std::size_t seeds = 1;
  std::string vector_dir = CR2_DEFAULT_VECTOR_DIR;
};

/// "3..32", "3,10,20,32" or a single value.
std::vector<std::size_t> parse_range(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw UsageError("bad --n value '" + text + "'");
    return static_cast<std::size_t>(v);
  };
  std::vector<std::size_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    auto lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
    if (lo > hi) throw UsageError("empty --n range '" + text + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(number(text.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::filesystem::path out_dir(const Options& o) {
  if (const char* env = std::getenv("CR2_OUT"); env && *env) return env;
  return o.out;
}

/// Writes next to the target and renames, so readers never see half a file.
void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Scenario load_scenario(const Options& o) {
  if (o.scenario.empty()) throw UsageError("--scenario is required");
  auto s = Scenario::load(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (o.rounds) s.rounds = *o.rounds;
  s.validate();
  return s;
}

void require_format(const std::string& format, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (format == a) return;
  throw UsageError("format '" + format + "' is not available for this command");
}

std::string ext(const std::string& format) { return format == "text" ? "txt" : format; }

int cmd_run(const Options& o) {
  auto s = load_scenario(o);
  auto format = o.format.empty() ? "json" : o.format;
  require_format(format, {"json", "text"});
  auto t = run(s);
  auto dir = out_dir(o);
  write_atomic(dir / (s.name + ".jsonl"), t.to_jsonl());
  auto summary = format == "json" ? t.summary_json() : t.summary_text();
  write_atomic(dir / (s.name + ".summary." + ext(format)), summary);
  std::cout << summary;
  if (!t.ok()) {
    for (const auto& v : t.violations) std::cerr << "violation: " << v << "\n";
    if (!t.route_matches()) std::cerr << "route of round 0 differs from expectedRoute\n";
    return kAssertion;
  }
  return kOk;
}

int cmd_sweep(const Options& o) {
  auto s = load_scenario(o);
  auto format = o.format.empty() ? "csv" : o.format;
  require_format(format, {"csv", "json", "text"});
  auto ns = parse_range(o.n.empty() ? "3..32" : o.n);
  for (auto n : ns)
    if (n < 2) throw UsageError("--n values must be at least 2");
  auto rows = sweep(s, ns);
  auto dir = out_dir(o);
  auto table = sweep_csv(rows);
  write_atomic(dir / (s.name + ".sweep.csv"), table);

  std::string fit_out;
  try {
    auto fits = cost_report(rows);
    fit_out = format == "csv" ? cost_report_csv(fits) : format == "json" ? cost_report_json(fits) : cost_report_text(fits);
    write_atomic(dir / (s.name + ".fit." + ext(format)), fit_out);
  } catch (const ProtocolError& e) {
    if (e.code() != Errc::NotEnoughPoints) throw;
    std::cerr << "fit skipped: " << e.what() << "\n";
  }
  std::cout << (format == "csv" ? table : fit_out);

  bool ok = true;
  for (const auto& r : rows)
    if (!r.ok) {
      std::cerr << "n=" << r.n << ": run failed its checks\n";
      ok = false;
    }
  return ok ? kOk : kAssertion;
}

int cmd_bias(const Options& o) {
  auto format = o.format.empty() ? "text" : o.format;
  require_format(format, {"json", "text"});
  auto ns = parse_range(o.n.empty() ? "3" : o.n);
  if (ns.size() != 1 || ns[0] < 2) throw UsageError("bias takes a single --n of at least 2");
  const std::size_t rounds = o.rounds.value_or(10000);
  const std::uint64_t first = o.seed.value_or(1);
  if (rounds == 0 || o.seeds == 0) throw UsageError("--rounds and --seeds must be positive");

  std::vector<std::future<BitBiasReport>> jobs;
  for (std::uint64_t k = 0; k < o.seeds; ++k)
    jobs.push_back(std::async(std::launch::async, [=] { return bias_test(rounds, ns[0], first + k); }));
  std::vector<BitBiasReport> reports;
  for (auto& j : jobs) reports.push_back(j.get());

  auto text = format == "json" ? bias_json(reports) : bias_text(reports, kBiasTolerance);
  write_atomic(out_dir(o) / ("bias-n" + std::to_string(ns[0]) + "." + ext(format)), text);
  std::cout << text;
  for (const auto& r : reports)
    if (!r.within(kBiasTolerance)) return kAssertion;
  return kOk;
}

int cmd_grief(const Options& o) {
  auto s = load_scenario(o);
  auto format = o.format.empty() ? "text" : o.format;
  require_format(format, {"json", "text"});
  auto ns = o.n.empty() ? std::vector<std::size_t>{s.operators} : parse_range(o.n);
  std::vector<GriefingReport> reports;
  for (auto n : ns) {
    auto copy = s;
    copy.operators = n;
    copy.validate();
    reports.push_back(griefing_report(copy));
  }
  auto text = format == "json" ? griefing_json(reports) : griefing_text(reports);
  write_atomic(out_dir(o) / (s.name + ".grief." + ext(format)), text);
  std::cout << text;
  for (const auto& r : reports)
    if (r.griefer_slashed || !r.same_output || r.griefer_deposit_after != r.griefer_deposit_before) return kAssertion;
  return kOk;
}

int cmd_vectors(const Options& o) {
  auto rep = check_all_vectors(o.vector_dir);
  for (const auto& f : rep.failures) std::cerr << "mismatch: " << f << "\n";
  std::cout << "vectors: " << rep.checked << " checked, " << rep.failures.size() << " failed\n";
  return rep.ok() ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Commit-Reveal2 beacon simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed; overrides the scenario file");
    sub->add_option("--out", o.out, "Output directory (CR2_OUT takes precedence)");
    sub->add_option("--format", o.format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
  };
  auto add_scenario = [&](CLI::App* sub) { sub->add_option("--scenario", o.scenario, "Scenario JSON file"); };

  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write its transcript");
  add_scenario(run_cmd);
  add_common(run_cmd);
  run_cmd->add_option("--rounds", o.rounds, "Rounds to request");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario across operator counts");
  add_scenario(sweep_cmd);
  add_common(sweep_cmd);
  sweep_cmd->add_option("--n", o.n, "Operator counts: 3..32 or 3,10,20");
  sweep_cmd->add_option("--rounds", o.rounds, "Rounds to request");

  auto* bias_cmd = app.add_subcommand("bias", "Per-bit output bias over honest rounds");
  add_common(bias_cmd);
  bias_cmd->add_option("--n", o.n, "Operator count");
  bias_cmd->add_option("--rounds", o.rounds, "Rounds per seed");
  bias_cmd->add_option("--seeds", o.seeds, "Number of consecutive seeds, starting at --seed");

  auto* grief_cmd = app.add_subcommand("grief", "Leader and griefer costs for a griefing scenario");
  add_scenario(grief_cmd);
  add_common(grief_cmd);
  grief_cmd->add_option("--n", o.n, "Operator counts");

  auto* vectors_cmd = app.add_subcommand("vectors", "Re-derive the golden crypto and merkle vectors");
  vectors_cmd->add_option("--dir", o.vector_dir, "Vector directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*bias_cmd) return cmd_bias(o);
    if (*grief_cmd) return cmd_grief(o);
    return cmd_vectors(o);
  } catch (const UsageError& e) {
    std::cerr << "cr2: " << e.what() << "\n";
    return kUsage;
  } catch (const ProtocolError& e) {
    std::cerr << "cr2: " << e.what() << "\n";
    if (e.code() == Errc::InvalidScenario || e.code() == Errc::InvalidArgument) return kUsage;
    return kAssertion;
  } catch (const std::exception& e) {
    std::cerr << "cr2: " << e.what() << "\n";
    return kAssertion;
  }
}
