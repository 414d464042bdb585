#include "icrst/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "icrst/error.hpp"
#include "icrst/nn.hpp"
#include "icrst/rng.hpp"

namespace icrst {
namespace {

std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

void check_training_set(const Matrix& train_x, const LabelVector& train_y, const Matrix& test_x) {
  if (train_x.rows() != train_y.size()) {
    throw ShapeError("classifier: " + std::to_string(train_y.size()) + " labels for " +
                     std::to_string(train_x.rows()) + " training rows");
  }
  if (train_x.rows() == 0) throw EmptyInputError("classifier: empty training set");
  if (test_x.cols() != train_x.cols()) {
    throw ShapeError("classifier: test features " + test_x.shape() + " vs training " + train_x.shape());
  }
}

std::vector<std::size_t> predict_knn(std::size_t k, const Matrix& train_x, const LabelVector& train_y,
                                     const Matrix& test_x) {
  std::vector<std::size_t> out;
  out.reserve(test_x.rows());
  std::vector<double> dist(train_x.rows());
  std::vector<double> votes(train_y.class_count());
  for (std::size_t r = 0; r < test_x.rows(); ++r) {
    for (std::size_t t = 0; t < train_x.rows(); ++t) dist[t] = squared_distance(test_x.row(r), train_x.row(t));
    std::fill(votes.begin(), votes.end(), 0.0);
    for (auto idx : top_k_smallest(dist, k)) votes[train_y[idx]] += 1.0;
    out.push_back(argmax_lowest(votes));
  }
  return out;
}

std::vector<std::size_t> predict_gaussian_nb(const Matrix& train_x, const LabelVector& train_y,
                                             const Matrix& test_x) {
  const std::size_t classes = train_y.class_count();
  const std::size_t d = train_x.cols();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < train_y.size(); ++i) members[train_y[i]].push_back(i);
  std::vector<Vector> mean(classes), var(classes);
  std::vector<double> log_prior(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c].empty()) {
      throw DegenerateClassError("GaussianNB: class " + std::to_string(c) + " absent from training data");
    }
    const Matrix sub = train_x.gather_rows(members[c]);
    mean[c] = column_mean(sub);
    var[c] = column_variance(sub);
    for (auto& v : var[c]) v = std::max(v, kGaussianNbVarianceFloor);
    log_prior[c] = std::log(static_cast<double>(members[c].size()) / static_cast<double>(train_y.size()));
  }
  constexpr double kLog2Pi = 1.8378770664093453;
  std::vector<double> log_norm(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t k = 0; k < d; ++k) log_norm[c] -= 0.5 * (kLog2Pi + std::log(var[c][k]));

  std::vector<std::size_t> out;
  out.reserve(test_x.rows());
  std::vector<double> post(classes);
  for (std::size_t r = 0; r < test_x.rows(); ++r) {
    const auto x = test_x.row(r);
    for (std::size_t c = 0; c < classes; ++c) {
      double s = log_prior[c] + log_norm[c];
      for (std::size_t k = 0; k < d; ++k) {
        const double z = x[k] - mean[c][k];
        s -= z * z / (2.0 * var[c][k]);
      }
      post[c] = s;
    }
    out.push_back(argmax_lowest(post));
  }
  return out;
}

struct Standardizer {
  Vector mean, scale;

  explicit Standardizer(const Matrix& x) : mean(column_mean(x)), scale(column_variance(x)) {
    for (auto& s : scale) s = std::sqrt(s) > 1e-12 ? std::sqrt(s) : 1.0;
  }
  Matrix apply(const Matrix& x) const {
    Matrix out = x;
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = (row[k] - mean[k]) / scale[k];
    }
    return out;
  }
};

std::vector<std::size_t> predict_mlp(const ClassifierSpec& spec, const Matrix& train_x,
                                     const LabelVector& train_y, const Matrix& test_x) {
  const Standardizer standardizer(train_x);
  const Matrix x = standardizer.apply(train_x);
  const std::size_t classes = train_y.class_count();

  SeededRng rng(mix_seed(spec.seed, 11));
  std::vector<DenseLayer> layers;
  std::size_t width = x.cols();
  for (auto h : spec.hidden) {
    layers.push_back(make_dense_layer(width, h, Activation::LeakyRelu, rng));
    width = h;
  }
  // Zero-initialised head: class ids enter only through the targets, so
  // relabelling classes permutes the logits.
  layers.push_back(DenseLayer{Matrix(classes, width), Vector(classes, 0.0), Activation::Identity});

  AdamState adam(layers);
  GradientSet grads = GradientSet::zeros_like(layers);
  std::vector<Matrix> trace;
  const std::size_t n = x.rows();
  const std::size_t batch = std::min(spec.batch_size, n);
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      const Matrix xb = x.gather_rows(rows);
      Matrix logits = forward_layers(layers, xb, &trace);
      // softmax cross-entropy gradient: (softmax - onehot) / batch
      const double inv = 1.0 / static_cast<double>(rows.size());
      for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (auto& v : row) z += (v = std::exp(v - mx));
        for (auto& v : row) v = v / z * inv;
        row[train_y[rows[r]]] -= inv;
      }
      backward_layers(layers, trace, std::move(logits), grads);
      optimizer_step(layers, grads, adam, spec.learning_rate);
    }
  }

  const Matrix logits = forward_layers(layers, standardizer.apply(test_x));
  std::vector<std::size_t> out;
  out.reserve(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) out.push_back(argmax_lowest(logits.row(r)));
  return out;
}

double sample_stddev(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ClassifierSpec ClassifierSpec::knn(std::size_t k) {
  ClassifierSpec s;
  s.kind = Kind::Knn;
  s.k = k;
  return s;
}

ClassifierSpec ClassifierSpec::gaussian_nb() {
  ClassifierSpec s;
  s.kind = Kind::GaussianNb;
  return s;
}

ClassifierSpec ClassifierSpec::mlp(std::vector<std::size_t> hidden, std::size_t epochs) {
  ClassifierSpec s;
  s.kind = Kind::Mlp;
  s.hidden = std::move(hidden);
  s.epochs = epochs;
  return s;
}

ClassifierSpec ClassifierSpec::majority() {
  ClassifierSpec s;
  s.kind = Kind::Majority;
  return s;
}

std::string ClassifierSpec::name() const {
  switch (kind) {
    case Kind::Knn: return "knn";
    case Kind::GaussianNb: return "gaussian_nb";
    case Kind::Mlp: return "mlp";
    case Kind::Majority: return "majority";
  }
  return "unknown";
}

void ClassifierSpec::validate() const {
  if (kind == Kind::Knn && k < 1) throw ConfigError("knn: k must be >= 1");
  if (kind == Kind::Mlp) {
    for (auto h : hidden)
      if (h < 1) throw ConfigError("mlp: hidden widths must be >= 1");
    if (epochs < 1) throw ConfigError("mlp: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("mlp: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("mlp: learning_rate must be > 0");
  }
}

std::vector<Fold> kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 1 || folds > n) {
    throw ConfigError("kfold_split: need 1 <= folds <= n, got folds=" + std::to_string(folds) +
                      " n=" + std::to_string(n));
  }
  SeededRng rng(mix_seed(seed, 21));
  const auto order = rng.permutation(n);
  std::vector<Fold> out(folds);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = n / folds + (f < n % folds ? 1 : 0);
    out[f].test.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                       order.begin() + static_cast<std::ptrdiff_t>(begin + len));
    std::sort(out[f].test.begin(), out[f].test.end());
    begin += len;
  }
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<bool> in_test(n, false);
    for (auto i : out[f].test) in_test[i] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_test[i]) out[f].train.push_back(i);
  }
  return out;
}

std::vector<std::size_t> fit_predict(const ClassifierSpec& spec, const Matrix& train_x,
                                     const LabelVector& train_y, const Matrix& test_x) {
  spec.validate();
  check_training_set(train_x, train_y, test_x);
  switch (spec.kind) {
    case ClassifierSpec::Kind::Knn:
      return predict_knn(spec.k, train_x, train_y, test_x);
    case ClassifierSpec::Kind::GaussianNb:
      return predict_gaussian_nb(train_x, train_y, test_x);
    case ClassifierSpec::Kind::Mlp:
      return predict_mlp(spec, train_x, train_y, test_x);
    case ClassifierSpec::Kind::Majority: {
      std::vector<double> counts(train_y.class_count(), 0.0);
      for (auto y : train_y.ids()) counts[y] += 1.0;
      return std::vector<std::size_t>(test_x.rows(), argmax_lowest(counts));
    }
  }
  return {};
}

Score score(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("score: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw EmptyInputError("score: no labels");
  std::size_t classes = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    classes = std::max({classes, truth[i] + 1, predicted[i] + 1});
  std::vector<double> tp(classes, 0.0), fp(classes, 0.0), fn(classes, 0.0);
  std::vector<bool> present(classes, false);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    present[truth[i]] = true;
    if (predicted[i] == truth[i]) {
      ++correct;
      tp[truth[i]] += 1.0;
    } else {
      fp[predicted[i]] += 1.0;
      fn[truth[i]] += 1.0;
    }
  }
  Score s;
  s.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  double f1_sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (!present[c]) continue;
    ++counted;
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];  // F1 = 2PR/(P+R) = 2tp/(2tp+fp+fn)
    f1_sum += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  s.macro_f1 = f1_sum / static_cast<double>(counted);
  return s;
}

MetricSummary summarize(std::vector<double> per_fold) {
  MetricSummary m;
  m.per_fold = std::move(per_fold);
  if (m.per_fold.empty()) return m;
  m.mean = std::accumulate(m.per_fold.begin(), m.per_fold.end(), 0.0) / static_cast<double>(m.per_fold.size());
  m.ci95 = 1.96 * sample_stddev(m.per_fold, m.mean) / std::sqrt(static_cast<double>(m.per_fold.size()));
  return m;
}

const MetricSummary& MetricReport::metric(const std::string& name) const {
  if (name == "accuracy") return accuracy;
  if (name == "macro_f1" || name == "f1") return macro_f1;
  throw ConfigError("unknown metric '" + name + "'");
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [name, m] : {std::pair{"accuracy", &accuracy}, std::pair{"macro_f1", &macro_f1}}) {
    arr.push_back({{"classifier", classifier},
                   {"folds", folds},
                   {"metric", name},
                   {"per_fold", m->per_fold},
                   {"mean", m->mean},
                   {"ci95", m->ci95}});
  }
  return arr.dump(2);
}

MetricReport cross_validate(const ClassifierSpec& spec, const Matrix& features, const LabelVector& labels,
                            std::size_t folds, std::uint64_t seed) {
  if (features.rows() != labels.size()) {
    throw ShapeError("cross_validate: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(features.rows()) + " rows");
  }
  const auto splits = kfold_split(features.rows(), folds, seed);
  std::vector<double> acc, f1;
  for (const auto& fold : splits) {
    const auto predicted = fit_predict(spec, features.gather_rows(fold.train), labels.gather(fold.train),
                                       features.gather_rows(fold.test));
    const auto truth = labels.gather(fold.test);
    const Score s = score(predicted, truth.ids());
    acc.push_back(s.accuracy);
    f1.push_back(s.macro_f1);
  }
  MetricReport report;
  report.classifier = spec.name();
  report.folds = folds;
  report.accuracy = summarize(std::move(acc));
  report.macro_f1 = summarize(std::move(f1));
  return report;
}

}  // namespace icrst
