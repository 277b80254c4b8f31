#pragma once

// Single-run error estimation for LURE: bootstrap replicates of the
// reweighted losses, the bootstrap variance (= MSE, since LURE is unbiased),
// a nested-bootstrap interval for it, and run-level summaries.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace active_eval {

struct BootstrapConfig {
  std::size_t B = 1000;
  std::size_t outer_B = 200;
  double ci_multiplier = 2.0;
  std::uint64_t seed = 0;

  void check() const;
};

struct BootstrapReport {
  double mse_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double sigma_hat = 0.0;
  double replicate_mean = 0.0;
  std::size_t K = 0;
};

/// B replicate means, each over K = L.size() draws from L with replacement.
/// Replicates use the stream (seed, stream).
std::vector<double> bootstrap_risks(std::span<const double> L, std::size_t B,
                                    std::uint64_t seed, std::uint64_t stream = 0);

/// Sample variance of the replicates (divisor B - 1).
double mse_estimate(std::span<const double> replicates);

/// Bootstrap MSE estimate with an interval estimate +- ci_multiplier * sigma,
/// where sigma is the standard deviation of the same estimator recomputed on
/// outer_B resamples of L. The lower bound is clamped at 0.
BootstrapReport confidence_interval(std::span<const double> L, const BootstrapConfig& config);

/// Mean of (estimate - true_risk)^2.
double empirical_mse(std::span<const double> estimates, double true_risk);

/// Fraction of reports with ci_low <= truth <= ci_high.
double coverage_probability(std::span<const BootstrapReport> reports,
                            std::span<const double> true_mses);

/// Pearson r. Throws DomainError for constant input.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace active_eval
