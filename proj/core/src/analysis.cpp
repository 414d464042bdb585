#include "icrst/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "icrst/error.hpp"

namespace icrst {
namespace {

using json = nlohmann::ordered_json;

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double sum(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void require_labels_match(const Matrix& data, const LabelVector& labels, const char* op) {
  if (labels.size() != data.rows()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(data.rows()) + " rows");
  }
}

}  // namespace

std::string ConvergenceReport::to_json() const {
  json j = json::array();
  for (const auto& c : classes) {
    j.push_back({{"class", c.cls}, {"absolute_gap", c.absolute}, {"relative_gap", c.relative}});
  }
  return json{{"mean_convergence", j}}.dump(2);
}

ConvergenceReport check_mean_convergence(const Network& net, const Matrix& data, const LabelVector& labels) {
  require_labels_match(data, labels, "check_mean_convergence");
  const auto stats = class_statistics(data, labels);
  const ClassIndex index(labels);
  ConvergenceReport report;
  for (std::size_t j = 0; j < stats.means.size(); ++j) {
    const Matrix out = reconstruct(net, data.gather_rows(index.members(j)));
    const Vector decoded_mean = column_mean(out);
    Vector diff(decoded_mean.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = decoded_mean[k] - stats.means[j][k];
    ClassGap gap;
    gap.cls = j;
    gap.absolute = norm2(diff);
    const double mu_norm = norm2(stats.means[j]);
    gap.relative = mu_norm > 0.0 ? gap.absolute / mu_norm
                                 : (gap.absolute == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    report.classes.push_back(gap);
  }
  return report;
}

std::string BoundReport::to_json() const {
  json j = json::array();
  for (const auto& c : classes) {
    j.push_back({{"class", c.cls},
                 {"loss_unhalved", c.loss},
                 {"target_variance", c.target_variance},
                 {"output_variance", c.output_variance},
                 {"bound", c.bound},
                 {"slack", c.slack},
                 {"trials", c.trials}});
  }
  return json{{"loss_bound", j},
              {"note", "loss is E||y - f(g(x))||^2, twice the halved training MSE"}}
      .dump(2);
}

BoundReport check_loss_bound(const Network& net, const Matrix& data, const LabelVector* labels,
                             const TrainingMode& mode, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw ConfigError("check_loss_bound: trials must be positive");
  std::vector<std::vector<std::size_t>> groups;
  switch (mode.kind()) {
    case TrainingMode::Kind::Standard:
      throw ConfigError("loss bound applies to ICRST or TRST training only");
    case TrainingMode::Kind::Trst: {
      std::vector<std::size_t> all(data.rows());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      groups.push_back(std::move(all));
      break;
    }
    case TrainingMode::Kind::Icrst: {
      if (labels == nullptr) throw ConfigError("ICRST loss bound needs labels");
      require_labels_match(data, *labels, "check_loss_bound");
      const ClassIndex index(*labels);
      for (std::size_t j = 0; j < index.class_count(); ++j) {
        const auto m = index.members(j);
        groups.emplace_back(m.begin(), m.end());
      }
      break;
    }
  }

  SeededRng rng(seed);
  BoundReport report;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (groups[j].size() < 2) {
      throw DegenerateClassError("class " + std::to_string(j) + " has " +
                                 std::to_string(groups[j].size()) + " rows; the bound needs at least 2");
    }
    const Matrix targets = data.gather_rows(groups[j]);
    const Matrix outputs = reconstruct(net, targets);
    ClassBound b;
    b.cls = j;
    b.trials = trials;
    b.target_variance = sum(column_variance(targets));
    b.output_variance = sum(column_variance(outputs));
    b.bound = b.target_variance + b.output_variance;
    double acc = 0.0;
    const std::size_t n = groups[j].size();
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t x = rng.uniform_index(n);
      const std::size_t y = rng.uniform_index(n);
      acc += squared_distance(targets.row(y), outputs.row(x));
    }
    b.loss = acc / static_cast<double>(trials);
    b.slack = b.loss - b.bound;
    report.classes.push_back(b);
  }
  return report;
}

ReconstructionIdentity reconstruction_identity(const Network& net, const Matrix& data) {
  if (data.rows() == 0) throw EmptyInputError("reconstruction_identity: no rows");
  const Matrix out = reconstruct(net, data);
  const std::size_t d = data.cols();
  Vector err(d, 0.0), f2(d, 0.0), x2(d, 0.0), xf(d, 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto x = data.row(r);
    const auto f = out.row(r);
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = f[k] - x[k];
      err[k] += diff * diff;
      f2[k] += f[k] * f[k];
      x2[k] += x[k] * x[k];
      xf[k] += x[k] * f[k];
    }
  }
  const double n = static_cast<double>(data.rows());
  ReconstructionIdentity result;
  for (std::size_t k = 0; k < d; ++k) {
    const double lhs = err[k] / n;
    const double rhs = f2[k] / n + x2[k] / n - 2.0 * xf[k] / n;
    result.lhs += lhs;
    result.rhs += rhs;
    result.max_residual = std::max(result.max_residual, std::abs(lhs - rhs));
  }
  result.max_residual = std::max(result.max_residual, std::abs(result.lhs - result.rhs));
  return result;
}

void VectorFieldGrid::write_csv(std::ostream& out) const {
  out << "x,y,dx,dy\n";
  out.precision(17);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out << points(i, 0) << ',' << points(i, 1) << ',' << displacements(i, 0) << ','
        << displacements(i, 1) << '\n';
  }
}

void VectorFieldGrid::write_svg(std::ostream& out, double arrow_scale) const {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (double s : {0.0, arrow_scale}) {
      const double x = points(i, 0) + s * displacements(i, 0);
      const double y = points(i, 1) + s * displacements(i, 1);
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (points.rows() == 0) x0 = y0 = -1, x1 = y1 = 1;
  const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1e-9});
  x0 -= pad, x1 += pad, y0 -= pad, y1 += pad;
  const double size = 600.0;
  const double scale = size / std::max(x1 - x0, y1 - y0);
  auto px = [&](double x) { return (x - x0) * scale; };
  auto py = [&](double y) { return (y1 - y) * scale; };  // SVG y grows downwards
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (x1 - x0) * scale << "\" height=\""
      << (y1 - y0) * scale << "\">\n"
      << "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" "
         "orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"#2a7\"/></marker></defs>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double ax = points(i, 0), ay = points(i, 1);
    const double bx = ax + arrow_scale * displacements(i, 0);
    const double by = ay + arrow_scale * displacements(i, 1);
    out << "<line x1=\"" << px(ax) << "\" y1=\"" << py(ay) << "\" x2=\"" << px(bx) << "\" y2=\""
        << py(by) << "\" stroke=\"#2a7\" stroke-width=\"1\" marker-end=\"url(#head)\"/>\n";
  }
  out << "</svg>\n";
}

VectorFieldGrid vector_field(const Network& net, const GridSpec& grid) {
  if (net.input_dim() != 2) {
    throw DimensionError("vector field needs a 2-D ambient space, network input is " +
                         std::to_string(net.input_dim()) + "-D");
  }
  if (grid.steps == 0) throw ConfigError("vector field grid needs at least one step per axis");
  const std::size_t s = grid.steps;
  auto coord = [&](double lo, double hi, std::size_t i) {
    return s == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(s - 1);
  };
  VectorFieldGrid field;
  field.points = Matrix(s * s, 2);
  for (std::size_t iy = 0; iy < s; ++iy) {
    for (std::size_t ix = 0; ix < s; ++ix) {
      field.points(iy * s + ix, 0) = coord(grid.x_min, grid.x_max, ix);
      field.points(iy * s + ix, 1) = coord(grid.y_min, grid.y_max, iy);
    }
  }
  field.displacements = reconstruct(net, field.points);
  for (std::size_t i = 0; i < field.displacements.size(); ++i)
    field.displacements.values()[i] -= field.points.values()[i];
  return field;
}

std::vector<double> contraction_ratio(const Network& net, const Matrix& data, const LabelVector& labels) {
  require_labels_match(data, labels, "contraction_ratio");
  const auto stats = class_statistics(data, labels);
  const Matrix out = reconstruct(net, data);
  std::vector<std::size_t> contracted(stats.means.size(), 0), eligible(stats.means.size(), 0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto& mu = stats.means[labels[r]];
    const double before = squared_distance(data.row(r), mu);
    if (before == 0.0) continue;
    ++eligible[labels[r]];
    if (squared_distance(out.row(r), mu) < before) ++contracted[labels[r]];
  }
  std::vector<double> ratio(stats.means.size(), 0.0);
  for (std::size_t j = 0; j < ratio.size(); ++j)
    if (eligible[j] > 0) ratio[j] = static_cast<double>(contracted[j]) / static_cast<double>(eligible[j]);
  return ratio;
}

PcaResult pca(const Matrix& data, std::size_t dims) {
  if (data.rows() == 0) throw EmptyInputError("pca: no rows");
  if (data.cols() < 2) throw DimensionError("pca: need at least 2 columns, got " + std::to_string(data.cols()));
  if (dims == 0 || dims > data.cols()) throw DimensionError("pca: dims must lie in [1, cols]");
  const std::size_t d = data.cols();
  const Vector mean = column_mean(data);
  Matrix centred = data;
  for (std::size_t r = 0; r < centred.rows(); ++r) {
    auto row = centred.row(r);
    for (std::size_t k = 0; k < d; ++k) row[k] -= mean[k];
  }
  Matrix cov = matmul_transposed_a(centred, centred);
  for (auto& v : cov.values()) v /= static_cast<double>(data.rows());

  constexpr double kTol = 1e-10;
  constexpr double kNullFraction = 1e-13;
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += cov(i, i);
  constexpr std::size_t kMaxIter = 20000;
  SeededRng rng(0x9ca);
  PcaResult result;
  result.components = Matrix(dims, d);
  for (std::size_t c = 0; c < dims; ++c) {
    Vector v(d);
    for (auto& x : v) x = rng.normal();
    // Two Gram-Schmidt passes: after deflation w can be almost parallel to an
    // earlier component, and one pass then leaves it far from orthogonal.
    auto orthonormalise = [&](Vector& w) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          const auto prev = result.components.row(p);
          double dot = 0.0;
          for (std::size_t k = 0; k < d; ++k) dot += w[k] * prev[k];
          for (std::size_t k = 0; k < d; ++k) w[k] -= dot * prev[k];
        }
      }
      const double n = norm2(w);
      if (n > 0.0)
        for (auto& x : w) x /= n;
      return n;
    };
    orthonormalise(v);
    double lambda = 0.0;
    for (std::size_t it = 0; it < kMaxIter; ++it) {
      Vector w(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        const auto ci = cov.row(i);
        for (std::size_t k = 0; k < d; ++k) w[i] += ci[k] * v[k];
      }
      const double n = orthonormalise(w);
      if (n <= kNullFraction * trace) {  // remaining spectrum is numerically zero; keep the orthogonal start
        lambda = 0.0;
        break;
      }
      double change = 0.0;
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += w[k] * v[k];
      const double sign = dot < 0.0 ? -1.0 : 1.0;
      for (std::size_t k = 0; k < d; ++k) change = std::max(change, std::abs(sign * w[k] - v[k]));
      v = std::move(w);
      lambda = n;
      if (change < kTol) break;
    }
    std::copy(v.begin(), v.end(), result.components.row(c).begin());
    result.eigenvalues.push_back(lambda);
    // Deflate.
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) cov(i, k) -= lambda * v[i] * v[k];
  }
  result.projection = matmul_transposed_b(centred, result.components);
  return result;
}

Matrix pca_project(const Matrix& latents, std::size_t dims) { return pca(latents, dims).projection; }

void write_projection_csv(std::ostream& out, const Matrix& projection, const LabelVector* labels) {
  out.precision(17);
  out << (labels ? "x,y,label\n" : "x,y\n");
  for (std::size_t r = 0; r < projection.rows(); ++r) {
    out << projection(r, 0) << ',' << (projection.cols() > 1 ? projection(r, 1) : 0.0);
    if (labels) out << ',' << (*labels)[r];
    out << '\n';
  }
}

}  // namespace icrst
