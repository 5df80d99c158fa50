#pragma once

#include "cr2/simulator.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace cr2 {

/// Secrets for `rounds` honest rounds of `n` operators, from one seeded
/// stream. The same (seed, n) always yields the same rounds.
class HonestRounds {
 public:
  HonestRounds(std::size_t n, std::uint64_t seed);
  std::vector<Bytes32> next();

 private:
  std::size_t n_;
  std::mt19937_64 rng_;
};

struct BitBiasReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  /// Mean of output bit i, bit 0 being the most significant bit of byte 0.
  std::array<double, 256> frequency{};
  double max_deviation = 0;

  bool within(double tolerance) const noexcept { return max_deviation <= tolerance; }
};

/// Per-bit means of omega_o over honest rounds. Throws InvalidArgument for
/// zero rounds or n < 2.
BitBiasReport bias_test(std::size_t rounds, std::size_t n, std::uint64_t seed);

struct PositionReport {
  std::size_t n = 0;
  std::size_t rounds = 0;
  /// matrix[i][p]: share of rounds in which operator i revealed at position p.
  std::vector<std::vector<double>> matrix;
  double max_cell_deviation = 0;
  double max_row_error = 0;
  double max_column_error = 0;
};

PositionReport position_test(std::size_t rounds, std::size_t n, std::uint64_t seed);

/// Share of honest rounds in which one of operators 0..k-1 reveals last.
double last_position_test(std::size_t rounds, std::size_t n, std::size_t k, std::uint64_t seed);

struct GrindReport {
  std::size_t trials = 0;
  std::size_t n = 0;
  std::size_t budget = 0;
  std::size_t adversary = 0;
  /// Share of trials in which the adversary ends up last.
  double last_frequency = 0;
  /// 1 - (1 - 1/n)^budget.
  double expected = 0;
  /// Swaps tried after commitments sealed, and how many the ledger rejected.
  std::size_t post_commit_attempts = 0;
  std::size_t post_commit_rejected = 0;
  /// Post-commit trials whose final order differed from the committed one.
  std::size_t post_commit_order_changes = 0;
};

/// The adversary may redraw its secret up to `budget` times before
/// committing, keeping the first candidate that puts it last. The first
/// `post_commit_trials` trials also replay the round on an on-chain ledger
/// where the adversary tries its other candidates after committing.
GrindReport grind_resistance_probe(std::size_t trials, std::size_t n, std::size_t budget, std::size_t adversary,
                                   std::uint64_t seed, std::size_t post_commit_trials = 64);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  /// True when every point lies on the line in exact integer arithmetic.
  bool exact = false;
};

/// Least-squares fit; throws NotEnoughPoints for fewer than three distinct x.
LinearFit fit_line(std::span<const std::int64_t> x, std::span<const std::int64_t> y);

struct CounterFit {
  std::string counter;
  LinearFit fit;
};

/// Fits each counter (and the weighted work) of a sweep's route costs against n.
std::vector<CounterFit> cost_report(std::span<const SweepRow> rows);

std::string bias_json(std::span<const BitBiasReport> reports);
std::string bias_text(std::span<const BitBiasReport> reports, double tolerance);
std::string cost_report_csv(std::span<const CounterFit> fits);
std::string cost_report_json(std::span<const CounterFit> fits);
std::string cost_report_text(std::span<const CounterFit> fits);

}  // namespace cr2
