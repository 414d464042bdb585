#pragma once

// Dense row-major matrices and the handful of kernels the rest of the library
// is written against. Rows are observations, columns are features.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace icrst {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of `data`; throws ShapeError unless data.size() == rows*cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Matrix transposed() const;
  /// Copies the listed rows, in order; indices may repeat. Throws BoundsError.
  Matrix gather_rows(std::span<const std::size_t> indices) const;
  std::string shape() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Class ids in [0, class_count). class_count is at least 1.
class LabelVector {
 public:
  LabelVector() = default;
  LabelVector(std::vector<std::size_t> ids, std::size_t class_count);
  /// class_count = max id + 1 (1 for an empty vector).
  static LabelVector from_ids(std::vector<std::size_t> ids);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t class_count() const noexcept { return class_count_; }
  std::size_t operator[](std::size_t i) const { return ids_[i]; }
  const std::vector<std::size_t>& ids() const noexcept { return ids_; }
  LabelVector gather(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<std::size_t> ids_;
  std::size_t class_count_ = 1;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materialising the transpose.
Matrix matmul_transposed_b(const Matrix& a, const Matrix& b);
/// a^T * b without materialising the transpose.
Matrix matmul_transposed_a(const Matrix& a, const Matrix& b);

Vector column_mean(const Matrix& a);
/// Population variance (divide by N).
Vector column_variance(const Matrix& a);

Matrix pairwise_euclidean(const Matrix& a, const Matrix& b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Indices of the k smallest values in ascending value order; equal values
/// keep index order.
std::vector<std::size_t> top_k_smallest(std::span<const double> values, std::size_t k);

bool all_finite(std::span<const double> values);

}  // namespace icrst
