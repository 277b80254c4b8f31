#include "active_eval/estimators.hpp"

#include <cmath>
#include <limits>

namespace active_eval {

std::string_view to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::uniform: return "uniform";
    case EstimatorTag::naive: return "naive";
    case EstimatorTag::lure: return "lure";
    case EstimatorTag::ase: return "ase";
    case EstimatorTag::truth: return "true";
  }
  return "?";
}

double lure_weight(std::size_t m, std::size_t N, std::size_t M, double q) {
  if (!(q > 0.0) || !(q <= 1.0)) throw DomainError("proposal mass must lie in (0, 1]");
  if (m < 1 || m > M || M > N) {
    throw DomainError("lure_weight needs 1 <= m <= M <= N, got m=" + std::to_string(m) +
                      " M=" + std::to_string(M) + " N=" + std::to_string(N));
  }
  if (N == M) return 1.0;
  const double remaining = static_cast<double>(N - m + 1);
  const double inverse_mass = remaining * q;
  // A uniform draw has q = 1/R, which multiplies back to 1 only up to
  // rounding; snap so uniform acquisition yields unit weights exactly.
  if (std::abs(inverse_mass - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return 1.0;
  const double level = static_cast<double>(N - M) / static_cast<double>(N - m);
  return 1.0 + level * (1.0 / inverse_mass - 1.0);
}

std::vector<double> reweighted_losses(const AcquisitionLog& log, std::size_t K) {
  if (K == 0) throw StateError("reweighted losses need K >= 1");
  if (K > log.size()) {
    throw StateError("prefix K=" + std::to_string(K) + " exceeds log length " +
                     std::to_string(log.size()));
  }
  std::vector<double> out;
  out.reserve(K);
  for (std::size_t j = 0; j < K; ++j) {
    const auto& rec = log.records[j];
    if (!rec.loss) {
      throw StateError("record " + std::to_string(rec.step) + " has no loss value");
    }
    out.push_back(lure_weight(rec.step, log.pool_size, K, rec.q) * *rec.loss);
  }
  return out;
}

namespace {

double mean(std::span<const double> xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

void require_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) throw NumericalError(std::string(what) + " estimate is not finite");
}

}  // namespace

RiskEstimate risk_lure(const AcquisitionLog& log) {
  if (log.empty()) throw StateError("LURE estimate needs a non-empty log");
  const auto weighted = reweighted_losses(log, log.size());
  const double value = mean(weighted);
  require_finite(value, "LURE");
  return {EstimatorTag::lure, value, log.size(), log.pool_size};
}

RiskEstimate risk_naive(const AcquisitionLog& log) {
  if (log.empty()) throw StateError("naive estimate needs a non-empty log");
  std::vector<double> losses;
  losses.reserve(log.size());
  for (const auto& rec : log.records) {
    if (!rec.loss) throw StateError("record " + std::to_string(rec.step) + " has no loss value");
    losses.push_back(*rec.loss);
  }
  auto est = risk_uniform(losses);
  est.tag = EstimatorTag::naive;
  est.pool_size = log.pool_size;
  return est;
}

RiskEstimate risk_uniform(std::span<const double> losses) {
  if (losses.empty()) throw StateError("uniform estimate needs at least one loss");
  const double value = mean(losses);
  require_finite(value, "uniform");
  return {EstimatorTag::uniform, value, losses.size(), losses.size()};
}

RiskEstimate risk_ase(const PredictionTable& surrogate, const PredictionTable& target,
                      const LossSpec& spec, const Pool& pool) {
  if (surrogate.num_inputs() != pool.size()) {
    throw ShapeError("surrogate table has " + std::to_string(surrogate.num_inputs()) +
                     " rows for a pool of " + std::to_string(pool.size()));
  }
  if (pool.empty()) throw StateError("ASE estimate needs a non-empty pool");
  const auto scores = expected_loss_scores(surrogate, target, spec, all_indices(pool.size()));
  const double value = mean(scores.scores);
  require_finite(value, "ASE");
  return {EstimatorTag::ase, value, 0, pool.size()};
}

RiskEstimate risk_true(const PredictionTable& target, const LabelOracle& labels,
                       const LossSpec& spec, const Pool& set) {
  if (set.empty()) throw StateError("true risk needs a non-empty set");
  if (target.num_inputs() != set.size() || labels.size() != set.size()) {
    throw ShapeError("true risk needs target rows and labels for all " +
                     std::to_string(set.size()) + " positions");
  }
  if (!set.fully_labelled()) throw StateError("true risk needs a fully labelled set");
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    total += loss(spec, target.row(i), labels.peek(i));
  }
  const double value = total / static_cast<double>(set.size());
  require_finite(value, "true");
  return {EstimatorTag::truth, value, set.size(), set.size()};
}

std::vector<double> running_lure(const AcquisitionLog& log) {
  std::vector<double> out;
  out.reserve(log.size());
  for (std::size_t K = 1; K <= log.size(); ++K) out.push_back(mean(reweighted_losses(log, K)));
  return out;
}

std::vector<double> running_naive(const AcquisitionLog& log) {
  std::vector<double> out;
  out.reserve(log.size());
  double total = 0.0;
  for (std::size_t j = 0; j < log.size(); ++j) {
    const auto& loss_value = log.records[j].loss;
    if (!loss_value) {
      throw StateError("record " + std::to_string(log.records[j].step) + " has no loss value");
    }
    total += *loss_value;
    out.push_back(total / static_cast<double>(j + 1));
  }
  return out;
}

}  // namespace active_eval
