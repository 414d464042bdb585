#include "icrst/ndcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

#include "icrst/error.hpp"

namespace icrst {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return ConstMap(m.values().data(), m.rows(), m.cols()); }
MutMap view(Matrix& m) { return MutMap(m.values().data(), m.rows(), m.cols()); }

void require_rows(const Matrix& a, const char* op) {
  if (a.rows() == 0) throw EmptyInputError(std::string(op) + ": matrix has no rows");
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged initializer");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw BoundsError("gather_rows: index " + std::to_string(indices[i]) +
                        " out of range for " + shape());
    }
    std::copy_n(data_.data() + indices[i] * cols_, cols_, out.data_.data() + i * cols_);
  }
  return out;
}

std::string Matrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

LabelVector::LabelVector(std::vector<std::size_t> ids, std::size_t class_count)
    : ids_(std::move(ids)), class_count_(class_count) {
  if (class_count_ == 0) throw DomainError("label vector needs at least one class");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] >= class_count_) {
      throw DomainError("label " + std::to_string(ids_[i]) + " at row " + std::to_string(i) +
                        " is not below class count " + std::to_string(class_count_));
    }
  }
}

LabelVector LabelVector::from_ids(std::vector<std::size_t> ids) {
  const std::size_t m = ids.empty() ? 1 : *std::max_element(ids.begin(), ids.end()) + 1;
  return LabelVector(std::move(ids), m);
}

LabelVector LabelVector::gather(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    if (i >= ids_.size()) throw BoundsError("label gather index out of range");
    out.push_back(ids_[i]);
  }
  return LabelVector(std::move(out), class_count_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Matrix c(a.rows(), b.cols());
  if (c.empty() || a.cols() == 0) return c;
  view(c).noalias() = view(a) * view(b);
  return c;
}

Matrix matmul_transposed_b(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed_b: cannot multiply " + a.shape() + " by transpose of " +
                     b.shape());
  }
  Matrix c(a.rows(), b.rows());
  if (c.empty() || a.cols() == 0) return c;
  view(c).noalias() = view(a) * view(b).transpose();
  return c;
}

Matrix matmul_transposed_a(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_transposed_a: cannot multiply transpose of " + a.shape() + " by " +
                     b.shape());
  }
  Matrix c(a.cols(), b.cols());
  if (c.empty() || a.rows() == 0) return c;
  view(c).noalias() = view(a).transpose() * view(b);
  return c;
}

Vector column_mean(const Matrix& a) {
  require_rows(a, "column_mean");
  Vector mean(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) mean[c] += row[c];
  }
  const double n = static_cast<double>(a.rows());
  for (auto& m : mean) m /= n;
  return mean;
}

Vector column_variance(const Matrix& a) {
  require_rows(a, "column_variance");
  // Centred second pass; algebraically E[X^2] - E[X]^2 without the cancellation.
  const Vector mean = column_mean(a);
  Vector var(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) {
      const double d = row[c] - mean[c];
      var[c] += d * d;
    }
  }
  const double n = static_cast<double>(a.rows());
  for (auto& v : var) v /= n;
  return var;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Matrix pairwise_euclidean(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("pairwise_euclidean: column mismatch " + a.shape() + " vs " + b.shape());
  }
  Matrix d(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t k = 0; k < b.rows(); ++k) d(i, k) = std::sqrt(squared_distance(ai, b.row(k)));
  }
  return d;
}

std::vector<std::size_t> top_k_smallest(std::span<const double> values, std::size_t k) {
  if (k > values.size()) {
    throw BoundsError("top_k_smallest: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(values.size()) + " values");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto less = [&](std::size_t x, std::size_t y) {
    return values[x] < values[y] || (values[x] == values[y] && x < y);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), less);
  idx.resize(k);
  return idx;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace icrst
