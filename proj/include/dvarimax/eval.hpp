#pragma once

// Signed-permutation error metric and the Monte-Carlo experiment harness.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dvarimax/estimator.hpp"
#include "dvarimax/init.hpp"
#include "dvarimax/linalg.hpp"
#include "dvarimax/model.hpp"
#include "dvarimax/rotation.hpp"

namespace dvarimax {

/// Minimum-cost perfect matching on a square cost matrix. Returns, for each
/// row, the column assigned to it.
std::vector<Index> solve_assignment(const Matrix& cost);

struct PermutationError {
  double error = 0.0;
  Matrix permutation;  // r x r signed permutation P minimizing ||est - truth P||_F
};

/// min over signed permutations P of ||estimate - truth P||_F, exact via
/// linear assignment on per-column costs.
PermutationError signed_permutation_error(const Matrix& estimate,
                                          const Matrix& truth);

enum class SweepParameter { N, P, R, Varepsilon2, Theta };

const char* to_string(SweepParameter s);
SweepParameter parse_sweep(const std::string& name);

/// Scheme label used in records ("random", "multi_random", "mom", ...).
std::string init_label(const InitScheme& scheme);

struct ExperimentGrid {
  SyntheticConfig base;
  SweepParameter sweep = SweepParameter::N;
  std::vector<double> values;
  std::vector<EstimatorVariant> variants{EstimatorVariant::Base};
  std::vector<InitScheme> init_schemes{MomInit{}};
  int replications = 100;
  std::uint64_t master_seed = 0;
  RotationSolveConfig solve;
  MomSubtraction mom_subtraction = MomSubtraction::AsWritten;
  int threads = 1;
  /// Record wall-clock runtime; when off runtime_ms is 0 so records are
  /// byte-reproducible.
  bool timing = false;

  void validate() const;
  /// Base config with the swept parameter set to `values[index]`.
  SyntheticConfig cell_config(std::size_t index) const;
};

struct ExperimentRecord {
  std::string variant;
  std::string init;
  std::string sweep_name;
  double sweep_value = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;  // dataset seed
  double error = 0.0;      // NaN on failure
  std::vector<int> iters;  // per column
  bool fallback = false;
  double runtime_ms = 0.0;
  std::string failure;     // empty on success

  int iters_total() const;
};

/// Seed of the dataset for (cell, replication); independent of every other
/// grid axis.
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t cell,
                               int rep);

/// Every (value x variant x init x replication), in that lexicographic
/// order regardless of thread count. Replication failures are recorded
/// with error = NaN and never abort the sweep.
std::vector<ExperimentRecord> run_experiment(const ExperimentGrid& grid);

struct SummaryRow {
  std::string variant;
  std::string init;
  std::string sweep_name;
  double sweep_value = 0.0;
  int n_ok = 0;
  int n_fail = 0;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double median_iters = 0.0;
};

/// Per-cell statistics over non-failed records, in first-seen cell order.
std::vector<SummaryRow> aggregate(std::span<const ExperimentRecord> records);

/// Linear-interpolation quantile of a sample (type 7).
double quantile(std::vector<double> values, double prob);

void write_records_csv(std::ostream& os,
                       std::span<const ExperimentRecord> records);
void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);

}  // namespace dvarimax
