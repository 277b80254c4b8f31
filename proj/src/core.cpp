#include "active_eval/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace active_eval {

// ---------------------------------------------------------------------------
// PredictionTable
// ---------------------------------------------------------------------------

PredictionTable::PredictionTable(std::size_t num_classes, std::vector<double> values)
    : num_inputs_(values.size() / num_classes),
      num_classes_(num_classes),
      values_(std::move(values)) {}

PredictionTable validate_table(std::size_t num_classes, std::vector<double> values) {
  if (num_classes < 2) {
    throw ValidationError("prediction table needs at least 2 classes, got " +
                          std::to_string(num_classes));
  }
  if (values.size() % num_classes != 0) {
    throw ValidationError("prediction table has " + std::to_string(values.size()) +
                          " entries, not a multiple of width " + std::to_string(num_classes));
  }
  const std::size_t rows = values.size() / num_classes;
  for (std::size_t r = 0; r < rows; ++r) {
    std::span<double> row(values.data() + r * num_classes, num_classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (!std::isfinite(row[c]) || row[c] < 0.0) {
        throw ValidationError("row " + std::to_string(r) + ": entry " + std::to_string(c) +
                              " is negative or non-finite");
      }
      sum += row[c];
    }
    const double deviation = std::abs(sum - 1.0);
    if (deviation > kRowSumTolerance) {
      throw ValidationError("row " + std::to_string(r) + ": probabilities sum to " +
                            std::to_string(sum));
    }
    if (deviation > kNormalizedSumTolerance) {
      for (double& p : row) p /= sum;
    }
  }
  return PredictionTable(num_classes, std::move(values));
}

PredictionTable validate_table(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("prediction table has no rows");
  const std::size_t width = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw ValidationError("row " + std::to_string(r) + ": expected " + std::to_string(width) +
                            " probabilities, got " + std::to_string(rows[r].size()));
    }
    flat.insert(flat.end(), rows[r].begin(), rows[r].end());
  }
  return validate_table(width, std::move(flat));
}

// ---------------------------------------------------------------------------
// Pool
// ---------------------------------------------------------------------------

Pool::Pool(std::vector<std::string> ids, std::vector<std::optional<std::size_t>> labels,
           SplitTag tag)
    : ids_(std::move(ids)), labels_(std::move(labels)), tag_(tag) {
  if (labels_.size() != ids_.size()) {
    throw ShapeError("pool has " + std::to_string(ids_.size()) + " ids but " +
                     std::to_string(labels_.size()) + " label slots");
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw ValidationError("duplicate pool id '" + id + "'");
  }
}

Pool::Pool(std::vector<std::string> ids, SplitTag tag)
    : Pool(ids, std::vector<std::optional<std::size_t>>(ids.size()), tag) {}

bool Pool::fully_labelled() const noexcept {
  return std::all_of(labels_.begin(), labels_.end(), [](const auto& l) { return l.has_value(); });
}

std::size_t Pool::require_label(std::size_t i) const {
  const auto& l = labels_.at(i);
  if (!l) throw StateError("pool id '" + ids_[i] + "' has no label");
  return *l;
}

Pool Pool::subset(std::span<const std::size_t> keep) const {
  std::vector<std::string> ids;
  std::vector<std::optional<std::size_t>> labels;
  ids.reserve(keep.size());
  labels.reserve(keep.size());
  for (std::size_t i : keep) {
    ids.push_back(ids_.at(i));
    labels.push_back(labels_.at(i));
  }
  return Pool(std::move(ids), std::move(labels), tag_);
}

// ---------------------------------------------------------------------------
// LabelOracle
// ---------------------------------------------------------------------------

LabelOracle::LabelOracle(std::vector<std::size_t> labels, std::size_t num_classes)
    : labels_(std::move(labels)), revealed_(labels_.size(), false), num_classes_(num_classes) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes_) {
      throw DomainError("label " + std::to_string(labels_[i]) + " at position " +
                        std::to_string(i) + " is outside [0, " + std::to_string(num_classes_) +
                        ")");
    }
  }
}

LabelOracle LabelOracle::from_pool(const Pool& pool, std::size_t num_classes) {
  std::vector<std::size_t> labels(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) labels[i] = pool.require_label(i);
  return LabelOracle(std::move(labels), num_classes);
}

std::size_t LabelOracle::reveal(std::size_t index) {
  const std::size_t label = labels_.at(index);
  if (!revealed_[index]) {
    revealed_[index] = true;
    ++revealed_count_;
  }
  return label;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

void LossSpec::check() const {
  if (!(probability_floor > 0.0) || !std::isfinite(probability_floor)) {
    throw ConfigError("probability_floor must be a positive finite value");
  }
}

double loss(const LossSpec& spec, std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw DomainError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(probs.size()) + ")");
  }
  switch (spec.kind) {
    case LossKind::log_loss:
      return -std::log(std::max(probs[label], spec.probability_floor));
    case LossKind::zero_one: {
      const auto best = std::max_element(probs.begin(), probs.end());
      return static_cast<std::size_t>(best - probs.begin()) == label ? 0.0 : 1.0;
    }
    case LossKind::brier: {
      double total = 0.0;
      for (std::size_t c = 0; c < probs.size(); ++c) {
        const double d = probs[c] - (c == label ? 1.0 : 0.0);
        total += d * d;
      }
      return total;
    }
  }
  throw DomainError("unknown loss kind");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::log_loss: return "log";
    case LossKind::zero_one: return "zero-one";
    case LossKind::brier: return "brier";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "log" || text == "log-loss") return LossKind::log_loss;
  if (text == "zero-one") return LossKind::zero_one;
  if (text == "brier") return LossKind::brier;
  throw ConfigError("unknown loss kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// AcquisitionConfig
// ---------------------------------------------------------------------------

std::string_view to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::expected_loss: return "expected-loss";
    case AcquisitionKind::entropy: return "entropy";
    case AcquisitionKind::nll: return "nll";
    case AcquisitionKind::uniform: return "uniform";
  }
  return "?";
}

AcquisitionKind parse_acquisition_kind(std::string_view text) {
  if (text == "expected-loss") return AcquisitionKind::expected_loss;
  if (text == "entropy") return AcquisitionKind::entropy;
  if (text == "nll") return AcquisitionKind::nll;
  if (text == "uniform") return AcquisitionKind::uniform;
  throw ConfigError("unknown acquisition kind '" + std::string(text) + "'");
}

void AcquisitionConfig::check(std::size_t pool_size) const {
  if (budget < 1) throw ConfigError("budget must be at least 1");
  if (budget > pool_size) {
    throw ConfigError("budget " + std::to_string(budget) + " exceeds pool size " +
                      std::to_string(pool_size));
  }
  if (!(clip_alpha >= 0.0 && clip_alpha <= 1.0)) {
    throw ConfigError("clip_alpha must lie in [0, 1]");
  }
}

}  // namespace active_eval
