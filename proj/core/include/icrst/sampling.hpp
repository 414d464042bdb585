#pragma once

// Reconstruction-target selection: identity (standard autoencoder), in-class
// random sampling, and whole-dataset random sampling.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "icrst/ndcore.hpp"
#include "icrst/rng.hpp"

namespace icrst {

class TrainingMode {
 public:
  enum class Kind { Standard, Icrst, Trst };

  static TrainingMode standard() { return TrainingMode(Kind::Standard, 0.0); }
  /// In-class sampling mixed in with probability p per step; throws DomainError outside [0,1].
  static TrainingMode icrst(double p);
  static TrainingMode trst() { return TrainingMode(Kind::Trst, 1.0); }

  Kind kind() const noexcept { return kind_; }
  /// Bernoulli mixing probability; 0 for Standard, 1 for TRST.
  double p() const noexcept { return p_; }
  bool needs_labels() const noexcept { return kind_ == Kind::Icrst; }
  /// "standard", "icrst" or "trst".
  std::string name() const;

  friend bool operator==(const TrainingMode&, const TrainingMode&) = default;

 private:
  TrainingMode(Kind kind, double p) : kind_(kind), p_(p) {}
  Kind kind_;
  double p_;
};

/// Row indices grouped by class id.
class ClassIndex {
 public:
  explicit ClassIndex(const LabelVector& labels);
  /// Direct construction; lists must be disjoint. Throws IntegrityError on overlap.
  explicit ClassIndex(std::vector<std::vector<std::size_t>> members);

  std::size_t class_count() const noexcept { return members_.size(); }
  std::span<const std::size_t> members(std::size_t cls) const { return members_.at(cls); }

 private:
  std::vector<std::vector<std::size_t>> members_;
};

/// One Bernoulli(p) draw. Throws DomainError when p is outside [0,1].
bool draw_step_flag(double p, SeededRng& rng);

struct TargetSelection {
  const LabelVector* labels = nullptr;      // required for ICRST
  const ClassIndex* class_index = nullptr;  // required for ICRST
  std::size_t dataset_size = 0;
  bool per_sample_flag = false;  // ICRST: draw the Bernoulli flag per row instead of per batch
};

/// Maps batch rows to the dataset rows whose values serve as targets.
/// Standard: identity. ICRST: with one flag per batch (or per row), targets
/// are drawn uniformly with replacement from the input's class. TRST: uniform
/// over the whole dataset.
std::vector<std::size_t> select_targets(std::span<const std::size_t> batch_rows, const TrainingMode& mode,
                                        const TargetSelection& ctx, SeededRng& rng);

struct ClassStatistics {
  std::vector<Vector> means;      // mu_j, one per class
  std::vector<Vector> variances;  // population per-feature variance
  std::vector<std::size_t> counts;
};

/// Throws EmptyInputError if any class in [0, class_count) has no rows.
ClassStatistics class_statistics(const Matrix& data, const LabelVector& labels);

}  // namespace icrst
