#include "active_eval/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "active_eval/core.hpp"
#include "active_eval/rng.hpp"

namespace active_eval {

void BootstrapConfig::check() const {
  if (B < 2) throw ConfigError("bootstrap needs B >= 2");
  if (outer_B < 2) throw ConfigError("bootstrap needs outer_B >= 2");
  if (!(ci_multiplier >= 0.0) || !std::isfinite(ci_multiplier)) {
    throw ConfigError("ci_multiplier must be finite and >= 0");
  }
}

namespace {

double resampled_mean(std::span<const double> L, Rng& rng) {
  const std::uint64_t K = L.size();
  double total = 0.0;
  for (std::uint64_t j = 0; j < K; ++j) total += L[rng.below(K)];
  return total / static_cast<double>(K);
}

// Welford accumulation; the summed-squares form loses everything to
// cancellation when replicates sit far from zero.
double sample_variance(std::span<const double> xs) {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  return std::max(0.0, m2 / static_cast<double>(n - 1));
}

double bootstrap_variance(std::span<const double> L, std::size_t B, Rng& rng, double* mean_out) {
  std::vector<double> replicates(B);
  for (auto& r : replicates) r = resampled_mean(L, rng);
  if (mean_out) {
    double total = 0.0;
    for (double r : replicates) total += r;
    *mean_out = total / static_cast<double>(B);
  }
  return sample_variance(replicates);
}

bool all_equal(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

}  // namespace

std::vector<double> bootstrap_risks(std::span<const double> L, std::size_t B,
                                    std::uint64_t seed, std::uint64_t stream) {
  if (L.empty()) throw StateError("bootstrap needs at least one reweighted loss");
  Rng rng(seed, stream);
  std::vector<double> out(B);
  for (auto& r : out) r = resampled_mean(L, rng);
  return out;
}

double mse_estimate(std::span<const double> replicates) {
  if (replicates.size() < 2) throw StateError("variance estimate needs at least 2 replicates");
  return sample_variance(replicates);
}

BootstrapReport confidence_interval(std::span<const double> L, const BootstrapConfig& config) {
  config.check();
  if (L.empty()) throw StateError("bootstrap needs at least one reweighted loss");

  BootstrapReport report;
  report.K = L.size();
  if (all_equal(L)) {
    // Every resample of a constant sequence is that constant.
    report.replicate_mean = L.front();
    return report;
  }

  // Stream 0 feeds the point estimate; streams 1..outer_B each feed one
  // outer resample of L and its inner replicates.
  {
    Rng rng(config.seed, 0);
    report.mse_estimate = bootstrap_variance(L, config.B, rng, &report.replicate_mean);
  }

  std::vector<double> outer(config.outer_B);
  std::vector<double> resample(L.size());
  for (std::size_t o = 0; o < config.outer_B; ++o) {
    Rng rng(config.seed, o + 1);
    for (auto& x : resample) x = L[rng.below(L.size())];
    outer[o] = bootstrap_variance(resample, config.B, rng, nullptr);
  }
  report.sigma_hat = std::sqrt(sample_variance(outer));
  report.ci_low = std::max(0.0, report.mse_estimate - config.ci_multiplier * report.sigma_hat);
  report.ci_high = report.mse_estimate + config.ci_multiplier * report.sigma_hat;
  return report;
}

double empirical_mse(std::span<const double> estimates, double true_risk) {
  if (estimates.empty()) throw StateError("empirical MSE needs at least one estimate");
  double total = 0.0;
  for (double e : estimates) total += (e - true_risk) * (e - true_risk);
  return total / static_cast<double>(estimates.size());
}

double coverage_probability(std::span<const BootstrapReport> reports,
                            std::span<const double> true_mses) {
  if (reports.size() != true_mses.size()) {
    throw ShapeError("coverage needs one true MSE per report");
  }
  if (reports.empty()) throw StateError("coverage needs at least one report");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].ci_low <= true_mses[i] && true_mses[i] <= reports[i].ci_high) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(reports.size());
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("correlation inputs differ in length");
  if (x.size() < 2) throw StateError("correlation needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("correlation is undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace active_eval
