#include "active_eval/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "active_eval/estimators.hpp"

namespace active_eval {

namespace {

void require_same_shape(const PredictionTable& a, const PredictionTable& b) {
  if (a.num_inputs() != b.num_inputs() || a.num_classes() != b.num_classes()) {
    throw ShapeError("surrogate table is " + std::to_string(a.num_inputs()) + "x" +
                     std::to_string(a.num_classes()) + " but target table is " +
                     std::to_string(b.num_inputs()) + "x" + std::to_string(b.num_classes()));
  }
}

void require_indices(const PredictionTable& table, std::span<const std::size_t> remaining) {
  for (std::size_t i : remaining) {
    if (i >= table.num_inputs()) {
      throw ShapeError("index " + std::to_string(i) + " outside table of " +
                       std::to_string(table.num_inputs()) + " rows");
    }
  }
}

double cross_entropy(std::span<const double> p, std::span<const double> f, double floor) {
  double total = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] > 0.0) total -= p[c] * std::log(std::max(f[c], floor));
  }
  return total;
}

double expected_loss(const LossSpec& spec, std::span<const double> surrogate,
                     std::span<const double> target) {
  if (spec.kind == LossKind::log_loss) {
    return cross_entropy(surrogate, target, spec.probability_floor);
  }
  double total = 0.0;
  for (std::size_t c = 0; c < surrogate.size(); ++c) {
    if (surrogate[c] > 0.0) total += surrogate[c] * loss(spec, target, c);
  }
  return total;
}

}  // namespace

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

ScoreVector expected_loss_scores(const PredictionTable& surrogate, const PredictionTable& target,
                                 const LossSpec& spec, std::span<const std::size_t> remaining) {
  require_same_shape(surrogate, target);
  require_indices(surrogate, remaining);
  ScoreVector out{{remaining.begin(), remaining.end()}, {}};
  out.scores.reserve(remaining.size());
  for (std::size_t i : remaining) {
    out.scores.push_back(expected_loss(spec, surrogate.row(i), target.row(i)));
  }
  return out;
}

ScoreVector entropy_scores(const PredictionTable& surrogate,
                           std::span<const std::size_t> remaining, double probability_floor) {
  require_indices(surrogate, remaining);
  ScoreVector out{{remaining.begin(), remaining.end()}, {}};
  out.scores.reserve(remaining.size());
  for (std::size_t i : remaining) {
    const auto row = surrogate.row(i);
    out.scores.push_back(cross_entropy(row, row, probability_floor));
  }
  return out;
}

ScoreVector nll_scores(const PredictionTable& surrogate, const Pool& labelled,
                       const LossSpec& spec, std::span<const std::size_t> remaining) {
  require_indices(surrogate, remaining);
  if (labelled.size() != surrogate.num_inputs()) {
    throw ShapeError("pool of " + std::to_string(labelled.size()) + " ids paired with table of " +
                     std::to_string(surrogate.num_inputs()) + " rows");
  }
  ScoreVector out{{remaining.begin(), remaining.end()}, {}};
  out.scores.reserve(remaining.size());
  for (std::size_t i : remaining) {
    out.scores.push_back(loss(spec, surrogate.row(i), labelled.require_label(i)));
  }
  return out;
}

ProposalDistribution build_proposal(const ScoreVector& scores, double clip_alpha) {
  if (!(clip_alpha >= 0.0 && clip_alpha <= 1.0)) {
    throw DomainError("clip_alpha must lie in [0, 1]");
  }
  if (scores.indices.size() != scores.scores.size()) {
    throw ShapeError("score vector has mismatched index and score lengths");
  }
  const std::size_t R = scores.size();
  if (R == 0) throw StateError("cannot build a proposal over no indices");

  double total = 0.0;
  for (double s : scores.scores) {
    if (!std::isfinite(s) || s < 0.0) throw DomainError("acquisition scores must be finite and >= 0");
    total += s;
  }

  ProposalDistribution out;
  out.indices = scores.indices;
  out.floor_value = clip_alpha / static_cast<double>(R);

  // clip_alpha == 1 puts the floor at 1/R, which forces the uniform
  // distribution; zero scores carry no preference either.
  if (total == 0.0 || clip_alpha == 1.0 || R == 1) {
    out.probs.assign(R, 1.0 / static_cast<double>(R));
    if (R == 1) out.probs[0] = 1.0;
    return out;
  }

  const double floor = out.floor_value;
  std::vector<char> floored(R, 0);
  std::size_t floored_count = 0;
  double free_score = total;
  out.probs.assign(R, 0.0);
  // The floored set only grows, so this terminates within R passes.
  for (;;) {
    const double free_mass = 1.0 - floor * static_cast<double>(floored_count);
    const double scale = free_mass / free_score;
    double next_free_score = 0.0;
    bool changed = false;
    for (std::size_t i = 0; i < R; ++i) {
      if (floored[i]) continue;
      const double p = scores.scores[i] * scale;
      if (p < floor) {
        floored[i] = 1;
        ++floored_count;
        changed = true;
      } else {
        out.probs[i] = p;
        next_free_score += scores.scores[i];
      }
    }
    if (!changed) break;
    free_score = next_free_score;
    if (floored_count == R || !(free_score > 0.0)) {
      // Only reachable through rounding when every entry sits at the floor.
      out.probs.assign(R, 1.0 / static_cast<double>(R));
      return out;
    }
  }
  for (std::size_t i = 0; i < R; ++i) {
    if (floored[i]) out.probs[i] = floor;
  }
  return out;
}

std::pair<std::size_t, double> sample_index(const ProposalDistribution& q, Rng& rng) {
  if (q.size() == 0) throw StateError("cannot sample from an empty proposal");
  const double u = rng.uniform01();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q.probs[i] <= 0.0) continue;
    cumulative += q.probs[i];
    last_positive = i;
    if (u < cumulative) return {q.indices[i], q.probs[i]};
  }
  // u landed in the rounding gap above the final cumulative sum.
  return {q.indices[last_positive], q.probs[last_positive]};
}

AcquisitionLog run_acquisition(const Pool& pool, const PredictionTable& surrogate,
                               const PredictionTable* target, LabelOracle& oracle,
                               const LossSpec& spec, const AcquisitionConfig& config) {
  spec.check();
  const std::size_t N = pool.size();
  config.check(N);
  if (surrogate.num_inputs() != N) {
    throw ShapeError("surrogate table has " + std::to_string(surrogate.num_inputs()) +
                     " rows for a pool of " + std::to_string(N));
  }
  if (oracle.size() != N) {
    throw ShapeError("label oracle covers " + std::to_string(oracle.size()) +
                     " positions for a pool of " + std::to_string(N));
  }
  if (target) require_same_shape(surrogate, *target);

  const auto everything = all_indices(N);
  std::vector<double> scores;
  switch (config.kind) {
    case AcquisitionKind::expected_loss:
      if (!target) throw ConfigError("expected-loss acquisition requires target predictions");
      scores = expected_loss_scores(surrogate, *target, spec, everything).scores;
      break;
    case AcquisitionKind::entropy:
      scores = entropy_scores(surrogate, everything, spec.probability_floor).scores;
      break;
    case AcquisitionKind::nll:
      if (!pool.fully_labelled()) {
        throw StateError("nll acquisition requires a fully labelled pool");
      }
      scores = nll_scores(surrogate, pool, spec, everything).scores;
      break;
    case AcquisitionKind::uniform:
      scores.assign(N, 0.0);
      break;
  }

  AcquisitionLog log;
  log.config = config;
  log.pool_size = N;
  log.records.reserve(config.budget);

  Rng rng(config.seed);
  std::vector<std::size_t> remaining = everything;
  ScoreVector step_scores;
  for (std::size_t m = 1; m <= config.budget; ++m) {
    step_scores.indices = remaining;
    step_scores.scores.resize(remaining.size());
    for (std::size_t j = 0; j < remaining.size(); ++j) step_scores.scores[j] = scores[remaining[j]];

    const ProposalDistribution q = build_proposal(step_scores, config.clip_alpha);
    const auto [index, mass] = sample_index(q, rng);

    AcquisitionRecord rec;
    rec.step = m;
    rec.pool_index = index;
    rec.q = mass;
    rec.v = lure_weight(m, N, config.budget, mass);
    rec.score = scores[index];
    const std::size_t label = oracle.reveal(index);
    if (target) rec.loss = loss(spec, target->row(index), label);
    log.records.push_back(rec);

    remaining.erase(std::lower_bound(remaining.begin(), remaining.end(), index));
  }
  return log;
}

void attach_losses(AcquisitionLog& log, const SparsePredictions& target, LabelOracle& oracle,
                   const LossSpec& spec) {
  for (auto& rec : log.records) {
    const auto it = target.find(rec.pool_index);
    if (it == target.end()) {
      throw StateError("no target prediction for acquired position " +
                       std::to_string(rec.pool_index));
    }
    rec.loss = loss(spec, it->second, oracle.reveal(rec.pool_index));
  }
}

std::vector<std::size_t> filter_indices_by_nll(const Pool& pool, const PredictionTable& model,
                                               double threshold) {
  if (model.num_inputs() != pool.size()) {
    throw ShapeError("model table has " + std::to_string(model.num_inputs()) +
                     " rows for a pool of " + std::to_string(pool.size()));
  }
  if (!pool.fully_labelled()) throw StateError("nll filtering requires a fully labelled pool");
  const LossSpec log_loss{};
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (loss(log_loss, model.row(i), *pool.label(i)) <= threshold) keep.push_back(i);
  }
  return keep;
}

Pool filter_pool_by_nll(const Pool& pool, const PredictionTable& model, double threshold) {
  const auto keep = filter_indices_by_nll(pool, model, threshold);
  return pool.subset(keep);
}

}  // namespace active_eval
