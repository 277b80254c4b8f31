#pragma once

// Acquisition scores, the clipped proposal distribution, and the sequential
// acquisition loop over a pool with a fixed, precomputed surrogate.

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "active_eval/core.hpp"
#include "active_eval/rng.hpp"

namespace active_eval {

/// Scores aligned with `indices` (pool positions).
struct ScoreVector {
  std::vector<std::size_t> indices;
  std::vector<double> scores;

  std::size_t size() const noexcept { return indices.size(); }
};

struct ProposalDistribution {
  std::vector<std::size_t> indices;
  std::vector<double> probs;
  double floor_value = 0.0;

  std::size_t size() const noexcept { return indices.size(); }
};

struct AcquisitionRecord {
  std::size_t step = 0;        // m, counted from 1
  std::size_t pool_index = 0;  // position in the pool
  double q = 0.0;              // proposal mass of the drawn index
  double v = 0.0;              // LURE weight at budget M
  std::optional<double> loss;  // absent when no target prediction was supplied
  double score = 0.0;          // acquisition score of the drawn index

  bool operator==(const AcquisitionRecord&) const = default;
};

struct AcquisitionLog {
  std::vector<AcquisitionRecord> records;
  AcquisitionConfig config;
  std::size_t pool_size = 0;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

/// Expected target loss under the surrogate. For log-loss this is the cross
/// entropy CE(surrogate, target).
ScoreVector expected_loss_scores(const PredictionTable& surrogate, const PredictionTable& target,
                                 const LossSpec& spec, std::span<const std::size_t> remaining);

/// Predictive entropy of the surrogate, with 0 log 0 = 0. Positive mass
/// below `probability_floor` is logged at the floor, matching the log-loss
/// flooring so that entropy and CE(surrogate, surrogate) agree bit-for-bit.
ScoreVector entropy_scores(const PredictionTable& surrogate,
                           std::span<const std::size_t> remaining,
                           double probability_floor = 1e-12);

/// Label-aware score: surrogate loss on the known label. Curation mode only;
/// throws StateError if any remaining position in `labelled` lacks a label.
ScoreVector nll_scores(const PredictionTable& surrogate, const Pool& labelled,
                       const LossSpec& spec, std::span<const std::size_t> remaining);

/// 0, 1, ..., n-1.
std::vector<std::size_t> all_indices(std::size_t n);

// ---------------------------------------------------------------------------
// Proposal and sampling
// ---------------------------------------------------------------------------

/// Normalizes scores and raises every entry below clip_alpha / R to exactly
/// that floor, rescaling the rest so the total stays one. Iterates until no
/// rescaled entry falls below the floor. All-zero scores give the uniform
/// distribution. Throws DomainError on negative or non-finite scores.
ProposalDistribution build_proposal(const ScoreVector& scores, double clip_alpha);

/// Inverse-CDF draw over the proposal's index order. Returns (pool index, q).
std::pair<std::size_t, double> sample_index(const ProposalDistribution& q, Rng& rng);

// ---------------------------------------------------------------------------
// Acquisition loop
// ---------------------------------------------------------------------------

/// Runs M acquisition steps. Scores are computed once for the whole pool;
/// each step rebuilds the clipped proposal over the indices not yet drawn.
/// `target` is required for expected-loss acquisition; without it records
/// carry no loss (see `attach_losses`). Labels are drawn from `oracle`.
AcquisitionLog run_acquisition(const Pool& pool, const PredictionTable& surrogate,
                               const PredictionTable* target, LabelOracle& oracle,
                               const LossSpec& spec, const AcquisitionConfig& config);

/// Target predictions keyed by pool position, for the partial-coverage case
/// where target predictions exist only for the acquired points.
using SparsePredictions = std::unordered_map<std::size_t, std::vector<double>>;

/// Fills in record losses from target rows. Throws StateError if an acquired
/// position has no row.
void attach_losses(AcquisitionLog& log, const SparsePredictions& target, LabelOracle& oracle,
                   const LossSpec& spec);

// ---------------------------------------------------------------------------
// Pool filtering
// ---------------------------------------------------------------------------

/// Positions whose negative log likelihood under `model` is <= threshold.
std::vector<std::size_t> filter_indices_by_nll(const Pool& pool, const PredictionTable& model,
                                               double threshold);

Pool filter_pool_by_nll(const Pool& pool, const PredictionTable& model, double threshold);

}  // namespace active_eval
