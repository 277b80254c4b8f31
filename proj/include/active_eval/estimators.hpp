#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "active_eval/acquisition.hpp"
#include "active_eval/core.hpp"

namespace active_eval {

enum class EstimatorTag { uniform, naive, lure, ase, truth };

std::string_view to_string(EstimatorTag tag);

struct RiskEstimate {
  EstimatorTag tag = EstimatorTag::lure;
  double value = 0.0;
  std::size_t budget_used = 0;
  std::size_t pool_size = 0;
};

/// LURE weight for step m (1-based) of M draws from a pool of N:
///   v = 1 + (N - M) / (N - m) * (1 / ((N - m + 1) q) - 1)
/// With N == M the leading factor is taken to be 0, so v == 1.
double lure_weight(std::size_t m, std::size_t N, std::size_t M, double q);

/// Mean of v_m * loss_m over the log. Requires every record to carry a loss.
RiskEstimate risk_lure(const AcquisitionLog& log);

/// Unweighted mean of the logged losses; biased under non-uniform proposals.
RiskEstimate risk_naive(const AcquisitionLog& log);

/// Arithmetic mean.
RiskEstimate risk_uniform(std::span<const double> losses);

/// Pool mean of the surrogate-expected target loss. Uses no acquired labels.
RiskEstimate risk_ase(const PredictionTable& surrogate, const PredictionTable& target,
                      const LossSpec& spec, const Pool& pool);

/// Mean target loss over a fully labelled set.
RiskEstimate risk_true(const PredictionTable& target, const LabelOracle& labels,
                       const LossSpec& spec, const Pool& set);

/// L_m = v_m * loss_m for the first K records, with weights recomputed for
/// budget K from the logged q values. The first K draws of a budget-M run are
/// distributed exactly as a budget-K run (the proposal never looks at M), so
/// these are the reweighted losses of an unbiased budget-K estimate.
std::vector<double> reweighted_losses(const AcquisitionLog& log, std::size_t K);

/// LURE estimate after each prefix K = 1..size(), each at its own budget K.
std::vector<double> running_lure(const AcquisitionLog& log);

/// Naive mean after each prefix.
std::vector<double> running_naive(const AcquisitionLog& log);

}  // namespace active_eval
