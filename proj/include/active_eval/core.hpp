#pragma once

// Domain types shared by every stage of the active-evaluation pipeline:
// prediction tables, pools, the label oracle, loss specifications and the
// acquisition configuration. Everything here is immutable after
// construction except LabelOracle's reveal counter.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace active_eval {

// ============================================================================
// Errors
// ============================================================================

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual std::string_view kind() const noexcept = 0;
};

#define ACTIVE_EVAL_ERROR(Name, tag)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    using Error::Error;                                                \
    std::string_view kind() const noexcept override { return tag; }   \
  };

ACTIVE_EVAL_ERROR(ValidationError, "validation")
ACTIVE_EVAL_ERROR(DomainError, "domain")
ACTIVE_EVAL_ERROR(ShapeError, "shape")
ACTIVE_EVAL_ERROR(StateError, "state")
ACTIVE_EVAL_ERROR(ConfigError, "config")
ACTIVE_EVAL_ERROR(NumericalError, "numerical")

#undef ACTIVE_EVAL_ERROR

// ============================================================================
// PredictionTable
// ============================================================================

/// Row-major table of per-input class probabilities. Rows are indexed by
/// pool position. Construct through `validate_table`, which enforces
/// non-negativity and unit row sums.
class PredictionTable {
 public:
  PredictionTable() = default;

  std::size_t num_inputs() const noexcept { return num_inputs_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * num_classes_, num_classes_};
  }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const PredictionTable&) const = default;

 private:
  friend PredictionTable validate_table(std::size_t, std::vector<double>);
  PredictionTable(std::size_t num_classes, std::vector<double> values);

  std::size_t num_inputs_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> values_;
};

/// Builds a table from `num_classes`-wide rows stored contiguously.
/// Rows whose sum is within 1e-6 of one are rescaled to sum to one; rows
/// already within 1e-12 are kept bit-for-bit so that re-ingesting an emitted
/// table is the identity. Throws ValidationError naming the first bad row.
PredictionTable validate_table(std::size_t num_classes, std::vector<double> values);

/// Convenience overload for tests and small inputs.
PredictionTable validate_table(const std::vector<std::vector<double>>& rows);

inline constexpr double kRowSumTolerance = 1e-6;
inline constexpr double kNormalizedSumTolerance = 1e-12;

// ============================================================================
// Pool / LabelOracle
// ============================================================================

enum class SplitTag { pool, test };

/// Ordered input ids with optional ground-truth labels.
class Pool {
 public:
  Pool() = default;
  Pool(std::vector<std::string> ids, std::vector<std::optional<std::size_t>> labels,
       SplitTag tag = SplitTag::pool);
  /// Unlabelled pool.
  explicit Pool(std::vector<std::string> ids, SplitTag tag = SplitTag::pool);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<std::optional<std::size_t>>& labels() const noexcept { return labels_; }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  std::optional<std::size_t> label(std::size_t i) const { return labels_.at(i); }
  SplitTag split() const noexcept { return tag_; }

  bool fully_labelled() const noexcept;
  /// Label at `i`; StateError when absent.
  std::size_t require_label(std::size_t i) const;

  /// Sub-pool keeping positions in `keep` (in the given order).
  Pool subset(std::span<const std::size_t> keep) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::optional<std::size_t>> labels_;
  SplitTag tag_ = SplitTag::pool;
};

/// Source of ground-truth labels, indexed by pool position. Counts how many
/// distinct positions have been revealed so callers can audit label cost.
class LabelOracle {
 public:
  LabelOracle() = default;
  LabelOracle(std::vector<std::size_t> labels, std::size_t num_classes);
  /// Oracle over a fully labelled pool.
  static LabelOracle from_pool(const Pool& pool, std::size_t num_classes);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_classes() const noexcept { return num_classes_; }

  std::size_t reveal(std::size_t index);
  /// Label access that does not count as a query (ground-truth bookkeeping).
  std::size_t peek(std::size_t index) const { return labels_.at(index); }
  std::size_t reveal_count() const noexcept { return revealed_count_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::size_t> labels_;
  std::vector<bool> revealed_;
  std::size_t revealed_count_ = 0;
  std::size_t num_classes_ = 0;
};

// ============================================================================
// Loss
// ============================================================================

enum class LossKind { log_loss, zero_one, brier };

struct LossSpec {
  LossKind kind = LossKind::log_loss;
  double probability_floor = 1e-12;

  void check() const;
};

/// Loss of prediction `probs` against `label`.
///   log-loss: -log(max(probs[label], floor))
///   zero-one: 0 iff argmax (lowest index on ties) equals label
///   brier:    squared L2 distance to the one-hot label
double loss(const LossSpec& spec, std::span<const double> probs, std::size_t label);

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);

// ============================================================================
// Acquisition configuration
// ============================================================================

enum class AcquisitionKind { expected_loss, entropy, nll, uniform };

std::string_view to_string(AcquisitionKind kind);
AcquisitionKind parse_acquisition_kind(std::string_view text);

struct AcquisitionConfig {
  std::size_t budget = 1;
  double clip_alpha = 0.1;
  AcquisitionKind kind = AcquisitionKind::expected_loss;
  std::uint64_t seed = 0;

  /// ConfigError unless 1 <= budget <= pool_size and 0 <= clip_alpha <= 1.
  void check(std::size_t pool_size) const;
};

}  // namespace active_eval
