#pragma once

// Downstream classification of latent features with k-fold cross-validation.

#include <cstdint>
#include <string>
#include <vector>

#include "icrst/ndcore.hpp"

namespace icrst {

struct ClassifierSpec {
  enum class Kind { Knn, GaussianNb, Mlp, Majority };

  Kind kind = Kind::Knn;
  std::size_t k = 5;                          // KNN
  std::vector<std::size_t> hidden = {100};    // MLP
  std::size_t epochs = 200;                   // MLP
  double learning_rate = 1e-3;                // MLP
  std::size_t batch_size = 200;               // MLP
  std::uint64_t seed = 0;                     // MLP initialisation and batching

  static ClassifierSpec knn(std::size_t k = 5);
  static ClassifierSpec gaussian_nb();
  static ClassifierSpec mlp(std::vector<std::size_t> hidden = {100}, std::size_t epochs = 200);
  /// Predicts the most frequent training label; a chance-level reference.
  static ClassifierSpec majority();

  std::string name() const;
  void validate() const;
};

inline constexpr double kGaussianNbVarianceFloor = 1e-9;

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffled partition of [0, n) into `folds` test folds whose sizes differ by
/// at most one (the first n % folds folds are larger). Index lists are sorted.
std::vector<Fold> kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed);

/// KNN: majority vote over k Euclidean neighbours, ties to the smallest id.
/// GaussianNB: per-class Gaussians with a 1e-9 variance floor and empirical
/// priors. MLP: softmax cross-entropy head over standardized inputs, trained
/// with Adam. Throws DegenerateClassError when GaussianNB misses a class.
std::vector<std::size_t> fit_predict(const ClassifierSpec& spec, const Matrix& train_x,
                                     const LabelVector& train_y, const Matrix& test_x);

struct Score {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Macro-F1 averages per-class F1 over the classes present in `truth`.
Score score(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

struct MetricSummary {
  std::vector<double> per_fold;
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sample stddev / sqrt(folds)
};

MetricSummary summarize(std::vector<double> per_fold);

struct MetricReport {
  std::string classifier;
  std::size_t folds = 0;
  MetricSummary accuracy;
  MetricSummary macro_f1;

  const MetricSummary& metric(const std::string& name) const;
  /// Array of {classifier, folds, metric, per_fold, mean, ci95}, one per metric.
  std::string to_json() const;
};

MetricReport cross_validate(const ClassifierSpec& spec, const Matrix& features, const LabelVector& labels,
                            std::size_t folds, std::uint64_t seed);

}  // namespace icrst
