#pragma once

// Dataset ingestion, normalisation and synthetic generators.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icrst/ndcore.hpp"

namespace icrst {

struct ChannelLayout {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return channels * height * width; }
};

struct RawDataset {
  Matrix features;
  std::optional<LabelVector> labels;
  std::optional<ChannelLayout> layout;  // set for image data, channel-major
  std::string name;

  std::size_t rows() const noexcept { return features.rows(); }
  RawDataset subset(std::span<const std::size_t> rows) const;
  /// Throws ShapeError when the layout or labels disagree with the features.
  void validate() const;
};

/// Big-endian IDX pair: images magic 0x00000803 [count, rows, cols], labels
/// magic 0x00000801 [count]. Pixels are returned unscaled in [0, 255].
RawDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Header row required. Every column except `label_column` must be numeric.
/// Labels are mapped to dense ids in order of first appearance. An empty
/// `label_column` loads an unlabeled dataset.
RawDataset load_csv(const std::filesystem::path& path, const std::string& label_column);

struct PreprocessSpec {
  enum class Kind {
    Image,    // divide by 255, then standardize per channel
    Tabular,  // per-feature min-max to [0,1], held-out values clamped
    None,
  };
  Kind kind = Kind::None;
  double std_floor = 1e-8;
};

/// Statistics fitted on training rows only, applied to any rows.
class Preprocessor {
 public:
  Preprocessor(const RawDataset& ds, const PreprocessSpec& spec, std::span<const std::size_t> train_rows);
  Matrix apply(const Matrix& features) const;

  const Vector& offsets() const noexcept { return offset_; }
  const Vector& scales() const noexcept { return scale_; }

 private:
  PreprocessSpec spec_;
  std::size_t channels_ = 1;
  Vector offset_;  // per channel (image) or per feature (tabular)
  Vector scale_;
};

/// Fits on `train_rows` and transforms every row of `ds`.
Matrix preprocess(const RawDataset& ds, const PreprocessSpec& spec, std::span<const std::size_t> train_rows);

/// Per-class isotropic Gaussians; stds.size() == means.size() == classes.
RawDataset synth_gaussians(std::size_t classes, const std::vector<Vector>& means, const std::vector<double>& stds,
                           std::size_t per_class, std::uint64_t seed);

/// Single-class noisy circle in R^2 with uniform angle.
RawDataset synth_circle(double radius, double noise_std, std::size_t count, std::uint64_t seed);

struct StratifiedSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Draws `train_count` + `test_count` rows with class proportions matching
/// the full label vector (largest-remainder rounding). Index lists are sorted.
StratifiedSplit stratified_split(const LabelVector& labels, std::size_t train_count, std::size_t test_count,
                                 std::uint64_t seed);

}  // namespace icrst
