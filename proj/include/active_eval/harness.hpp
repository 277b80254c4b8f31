#pragma once

// Synthetic evaluation problems and the multi-seed experiment runner.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "active_eval/core.hpp"
#include "active_eval/diagnostics.hpp"
#include "active_eval/estimators.hpp"

namespace active_eval {

struct SyntheticConfig {
  std::size_t N = 2000;
  std::size_t C = 3;
  std::size_t test_size = 2000;
  /// Target rows are the true distribution raised to 1/T and renormalized.
  double target_temperature = 1.0;
  /// Mixing weight in [0, 1] between the target row and a random
  /// probability vector (uniform entries, normalized). 1 = pure noise.
  double surrogate_noise = 0.0;
  double label_flip_rate = 0.0;
  /// Dirichlet concentration; one value (symmetric) or one per class.
  std::vector<double> concentration{1.0};
  std::uint64_t seed = 0;

  void check() const;
};

struct SyntheticProblem {
  Pool pool;  // labels stored for ground-truth bookkeeping
  LabelOracle oracle;
  PredictionTable target;
  PredictionTable surrogate;
  Pool test;
  LabelOracle test_oracle;
  PredictionTable test_target;
};

/// Draws a problem from `config`; bit-identical for a fixed seed on a given
/// standard library (gamma variates come from std::gamma_distribution).
SyntheticProblem generate_synthetic(const SyntheticConfig& config);

enum class TruthSource { test_split, pool };

struct MethodSpec {
  std::string name;
  AcquisitionConfig acquisition;  // seed is replaced per run
  EstimatorTag estimator = EstimatorTag::lure;
};

struct ExperimentOptions {
  LossSpec loss;
  TruthSource truth = TruthSource::test_split;
  std::size_t relative_offset = 0;
  /// Worker threads (0 = hardware concurrency), capped by
  /// ACTIVE_EVAL_THREADS. Results do not depend on the value.
  std::size_t threads = 0;
};

struct ExperimentResult {
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::size_t budget = 0;
  double true_risk = 0.0;
  /// estimates[method][seed][K - 1]
  std::vector<std::vector<std::vector<double>>> estimates;
  /// median_sq_err[method][K - 1]
  std::vector<std::vector<double>> median_sq_err;
  /// rel_err[method][K - 1]; NaN where undefined or with no uniform baseline.
  std::vector<std::vector<double>> rel_err;
  /// Index of the uniform baseline method, or methods.size() when absent.
  std::size_t baseline = 0;
};

ExperimentResult run_experiment(const SyntheticProblem& problem, std::span<const MethodSpec> methods,
                                std::span<const std::uint64_t> seeds,
                                const ExperimentOptions& options);

/// Median over seeds of (estimate - true_risk)^2. Even counts average the
/// two central order statistics.
double median_squared_error(std::span<const double> estimates, double true_risk);

/// active[K] / uniform[K + offset]; NaN where the uniform point is 0 or
/// beyond the grid. Throws ShapeError when the grids differ in length.
std::vector<double> relative_error_curve(std::span<const double> active_mse,
                                         std::span<const double> uniform_mse,
                                         std::size_t offset = 0);

/// `count` run seeds derived from `base`.
std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t count);

/// `requested` if non-zero, else hardware concurrency; capped by
/// ACTIVE_EVAL_THREADS when set.
std::size_t worker_count(std::size_t requested);

// ---------------------------------------------------------------------------
// Coverage study
// ---------------------------------------------------------------------------

struct CoverageRow {
  std::size_t run_id = 0;
  std::size_t K = 0;
  double mse_true = 0.0;
  double mse_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool covered = false;
};

struct CoverageResult {
  std::vector<std::size_t> K_grid;
  std::vector<CoverageRow> rows;        // run-major, then K
  std::vector<double> coverage;         // per K in K_grid
  std::vector<double> mse_true;         // per K in K_grid
  double pool_risk = 0.0;
};

/// Runs `runs` acquisitions of `method`, and at each K computes the
/// across-run MSE of the budget-K LURE estimate around the pool risk and
/// each run's bootstrap interval for it.
CoverageResult run_coverage_study(const SyntheticProblem& problem, const MethodSpec& method,
                                  std::size_t runs, std::span<const std::size_t> K_grid,
                                  const BootstrapConfig& bootstrap, std::uint64_t base_seed,
                                  const ExperimentOptions& options);

}  // namespace active_eval
