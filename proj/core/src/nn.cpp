#include "icrst/nn.hpp"

#include <algorithm>
#include <cmath>

#include "icrst/error.hpp"

namespace icrst {
namespace {

void apply_activation(Activation act, std::span<double> values) {
  switch (act) {
    case Activation::Identity:
      return;
    case Activation::LeakyRelu:
      for (auto& v : values) v = v > 0.0 ? v : kLeakySlope * v;
      return;
    case Activation::Sigmoid:
      for (auto& v : values) v = 1.0 / (1.0 + std::exp(-v));
      return;
  }
}

// Multiplies `grad` in place by the activation derivative, recovered from
// the post-activation values.
void scale_by_derivative(Activation act, std::span<const double> post, std::span<double> grad) {
  switch (act) {
    case Activation::Identity:
      return;
    case Activation::LeakyRelu:
      for (std::size_t i = 0; i < grad.size(); ++i)
        if (!(post[i] > 0.0)) grad[i] *= kLeakySlope;
      return;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= post[i] * (1.0 - post[i]);
      return;
  }
}

void validate_layer(const DenseLayer& layer, std::size_t index) {
  if (layer.bias.size() != layer.out()) {
    throw ShapeError("layer " + std::to_string(index) + ": bias length " +
                     std::to_string(layer.bias.size()) + " does not match " +
                     std::to_string(layer.out()) + " outputs");
  }
  if (layer.in() == 0 || layer.out() == 0) {
    throw ShapeError("layer " + std::to_string(index) + " has a zero dimension");
  }
}

void check_congruent(std::span<const DenseLayer> layers, const GradientSet& grads) {
  if (!grads.congruent_with(layers)) throw ShapeError("gradient set is not congruent with network");
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "leaky_relu" || name == "leakyrelu") return Activation::LeakyRelu;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + name + "'");
}

DenseLayer make_dense_layer(std::size_t in, std::size_t out, Activation activation, SeededRng& rng) {
  DenseLayer layer{Matrix(out, in), Vector(out, 0.0), activation};
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (auto& w : layer.weights.values()) w = (2.0 * rng.uniform01() - 1.0) * limit;
  return layer;
}

bool operator==(const DenseLayer& a, const DenseLayer& b) {
  return a.activation == b.activation && a.weights == b.weights && a.bias == b.bias;
}

Network::Network(std::vector<DenseLayer> encoder, std::vector<DenseLayer> decoder) {
  if (encoder.empty() || decoder.empty()) {
    throw ShapeError("network needs at least one encoder and one decoder layer");
  }
  encoder_layers_ = encoder.size();
  layers_ = std::move(encoder);
  layers_.insert(layers_.end(), std::make_move_iterator(decoder.begin()),
                 std::make_move_iterator(decoder.end()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    validate_layer(layers_[i], i);
    if (i > 0 && layers_[i].in() != layers_[i - 1].out()) {
      throw ShapeError("layer " + std::to_string(i) + " expects " + std::to_string(layers_[i].in()) +
                       " inputs but previous layer emits " + std::to_string(layers_[i - 1].out()));
    }
  }
  if (layers_.back().out() != input_dim()) {
    throw ShapeError("decoder emits " + std::to_string(layers_.back().out()) +
                     " values, input has " + std::to_string(input_dim()));
  }
  if (latent_dim() >= input_dim()) {
    throw DimensionError("latent width " + std::to_string(latent_dim()) +
                         " must be below input width " + std::to_string(input_dim()));
  }
}

Network Network::build(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.latent_dim == 0) throw ShapeError("architecture has zero width");
  SeededRng rng(seed);
  std::vector<DenseLayer> enc;
  std::vector<DenseLayer> dec;
  std::size_t width = arch.input_dim;
  for (auto h : arch.encoder_hidden) {
    enc.push_back(make_dense_layer(width, h, arch.hidden_activation, rng));
    width = h;
  }
  enc.push_back(make_dense_layer(width, arch.latent_dim, arch.latent_activation, rng));
  width = arch.latent_dim;
  for (auto h : arch.decoder_hidden) {
    dec.push_back(make_dense_layer(width, h, arch.hidden_activation, rng));
    width = h;
  }
  dec.push_back(make_dense_layer(width, arch.input_dim, arch.output_activation, rng));
  return Network(std::move(enc), std::move(dec));
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

bool operator==(const Network& a, const Network& b) {
  return a.encoder_layers_ == b.encoder_layers_ && a.layers_ == b.layers_;
}

Architecture breastcancer_architecture(std::size_t input_dim) {
  Architecture arch;
  arch.input_dim = input_dim;
  arch.encoder_hidden = {64};
  arch.latent_dim = 8;
  arch.decoder_hidden = {8, 64};
  arch.hidden_activation = Activation::LeakyRelu;
  arch.latent_activation = Activation::LeakyRelu;
  arch.output_activation = Activation::Sigmoid;
  return arch;
}

Network preset_breastcancer(std::size_t input_dim, std::uint64_t seed) {
  return Network::build(breastcancer_architecture(input_dim), seed);
}

Matrix forward_layers(std::span<const DenseLayer> layers, const Matrix& input,
                      std::vector<Matrix>* trace) {
  if (!layers.empty() && input.cols() != layers.front().in()) {
    throw ShapeError("forward: batch is " + input.shape() + " but network expects " +
                     std::to_string(layers.front().in()) + " columns");
  }
  if (trace) {
    trace->clear();
    trace->reserve(layers.size() + 1);
    trace->push_back(input);
  }
  Matrix current = input;
  for (const auto& layer : layers) {
    Matrix z = matmul_transposed_b(current, layer.weights);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
    }
    apply_activation(layer.activation, z.values());
    if (trace) trace->push_back(z);
    current = std::move(z);
  }
  return current;
}

Matrix backward_layers(std::span<const DenseLayer> layers, const std::vector<Matrix>& trace,
                       Matrix output_grad, GradientSet& grads) {
  if (trace.size() != layers.size() + 1) throw ShapeError("backward: trace does not match layers");
  check_congruent(layers, grads);
  Matrix delta = std::move(output_grad);
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& layer = layers[i];
    scale_by_derivative(layer.activation, trace[i + 1].values(), delta.values());
    grads.weights[i] = matmul_transposed_a(delta, trace[i]);
    auto& db = grads.biases[i];
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto row = delta.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) db[c] += row[c];
    }
    delta = matmul(delta, layer.weights);
  }
  return delta;
}

ForwardResult forward(const Network& net, const Matrix& batch) {
  ForwardResult r;
  r.latent = forward_layers(net.encoder(), batch);
  r.output = forward_layers(net.decoder(), r.latent);
  return r;
}

Matrix encode(const Network& net, const Matrix& batch) {
  return forward_layers(net.encoder(), batch);
}

Matrix reconstruct(const Network& net, const Matrix& batch) {
  return forward_layers(net.layers(), batch);
}

double mse_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw ShapeError("mse_loss: output " + output.shape() + " vs target " + target.shape());
  }
  if (output.rows() == 0) return 0.0;
  double s = 0.0;
  const auto o = output.values();
  const auto t = target.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double d = o[i] - t[i];
    s += d * d;
  }
  return s / (2.0 * static_cast<double>(output.rows()));
}

GradientSet GradientSet::zeros_like(std::span<const DenseLayer> layers) {
  GradientSet g;
  g.weights.reserve(layers.size());
  g.biases.reserve(layers.size());
  for (const auto& l : layers) {
    g.weights.emplace_back(l.out(), l.in());
    g.biases.emplace_back(l.out(), 0.0);
  }
  return g;
}

bool GradientSet::congruent_with(std::span<const DenseLayer> layers) const {
  if (weights.size() != layers.size() || biases.size() != layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (weights[i].rows() != layers[i].out() || weights[i].cols() != layers[i].in()) return false;
    if (biases[i].size() != layers[i].out()) return false;
  }
  return true;
}

LossAndGradients loss_and_gradients(const Network& net, const Matrix& batch, const Matrix& target) {
  if (target.rows() != batch.rows() || target.cols() != net.input_dim()) {
    throw ShapeError("backward: target " + target.shape() + " does not match batch " +
                     batch.shape());
  }
  std::vector<Matrix> trace;
  const Matrix output = forward_layers(net.layers(), batch, &trace);
  LossAndGradients result;
  result.loss = mse_loss(output, target);
  // d/d(output) of 1/(2N) sum (o - t)^2
  Matrix grad(output.rows(), output.cols());
  const double inv_n = batch.rows() == 0 ? 0.0 : 1.0 / static_cast<double>(batch.rows());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad.values()[i] = (output.values()[i] - target.values()[i]) * inv_n;
  result.gradients = GradientSet::zeros_like(net.layers());
  backward_layers(net.layers(), trace, std::move(grad), result.gradients);
  return result;
}

GradientSet backward(const Network& net, const Matrix& batch, const Matrix& target) {
  return loss_and_gradients(net, batch, target).gradients;
}

AdamState::AdamState(std::span<const DenseLayer> layers, AdamConfig config)
    : config_(config),
      first_(GradientSet::zeros_like(layers)),
      second_(GradientSet::zeros_like(layers)) {}

namespace {

void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamConfig& cfg, double step_size, double bias2) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    params[i] -= step_size * m[i] / (std::sqrt(v[i] / bias2) + cfg.epsilon);
  }
}

}  // namespace

void optimizer_step(std::span<DenseLayer> layers, const GradientSet& grads, AdamState& state,
                    double learning_rate) {
  check_congruent(layers, grads);
  if (!state.first_.congruent_with(layers)) throw ShapeError("optimizer state does not match network");
  ++state.step_;
  const auto& cfg = state.config_;
  const double t = static_cast<double>(state.step_);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  const double step_size = learning_rate / bias1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    adam_update(layers[i].weights.values(), grads.weights[i].values(),
                state.first_.weights[i].values(), state.second_.weights[i].values(), cfg, step_size,
                bias2);
    adam_update(layers[i].bias, grads.biases[i], state.first_.biases[i], state.second_.biases[i], cfg,
                step_size, bias2);
  }
}

void optimizer_step(Network& net, const GradientSet& grads, AdamState& state, double learning_rate) {
  optimizer_step(net.layers(), grads, state, learning_rate);
}

}  // namespace icrst
