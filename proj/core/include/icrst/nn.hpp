#pragma once

// Dense encoder/decoder networks with hand-written backpropagation and Adam.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "icrst/ndcore.hpp"
#include "icrst/rng.hpp"

namespace icrst {

enum class Activation : std::uint8_t { Identity = 0, LeakyRelu = 1, Sigmoid = 2 };

inline constexpr double kLeakySlope = 0.01;

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Identity;

  std::size_t in() const noexcept { return weights.cols(); }
  std::size_t out() const noexcept { return weights.rows(); }
};

/// Glorot-uniform weights in +-sqrt(6/(in+out)), zero bias.
DenseLayer make_dense_layer(std::size_t in, std::size_t out, Activation activation, SeededRng& rng);

struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> encoder_hidden;
  std::size_t latent_dim = 0;
  std::vector<std::size_t> decoder_hidden;
  Activation hidden_activation = Activation::LeakyRelu;
  Activation latent_activation = Activation::Identity;
  Activation output_activation = Activation::Identity;
};

/// Undercomplete autoencoder f(g(x)). Layers are stored encoder first; the
/// encoder ends at the bottleneck of width latent_dim < input_dim.
class Network {
 public:
  Network(std::vector<DenseLayer> encoder, std::vector<DenseLayer> decoder);
  static Network build(const Architecture& arch, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return layers_.front().in(); }
  std::size_t latent_dim() const noexcept { return layers_[encoder_layers_ - 1].out(); }
  std::size_t encoder_layer_count() const noexcept { return encoder_layers_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const noexcept;

  std::span<const DenseLayer> layers() const noexcept { return layers_; }
  std::span<DenseLayer> layers() noexcept { return layers_; }
  std::span<const DenseLayer> encoder() const noexcept { return {layers_.data(), encoder_layers_}; }
  std::span<const DenseLayer> decoder() const noexcept {
    return {layers_.data() + encoder_layers_, layers_.size() - encoder_layers_};
  }

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::vector<DenseLayer> layers_;
  std::size_t encoder_layers_ = 0;
};

bool operator==(const DenseLayer& a, const DenseLayer& b);

/// The BreastCancer architecture: encoder [64, 8], decoder [8, 64] with
/// LeakyReLU everywhere except a Sigmoid output; latent width 8.
Network preset_breastcancer(std::size_t input_dim = 30, std::uint64_t seed = 0);
Architecture breastcancer_architecture(std::size_t input_dim = 30);

struct ForwardResult {
  Matrix latent;
  Matrix output;
};

ForwardResult forward(const Network& net, const Matrix& batch);
Matrix encode(const Network& net, const Matrix& batch);
Matrix reconstruct(const Network& net, const Matrix& batch);

/// 1/(2N) * sum of squared differences, N = rows.
double mse_loss(const Matrix& output, const Matrix& target);

/// Per-layer parameter gradients, indexed like Network::layers().
struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static GradientSet zeros_like(std::span<const DenseLayer> layers);
  bool congruent_with(std::span<const DenseLayer> layers) const;
};

struct LossAndGradients {
  double loss = 0.0;
  GradientSet gradients;
};

GradientSet backward(const Network& net, const Matrix& batch, const Matrix& target);
LossAndGradients loss_and_gradients(const Network& net, const Matrix& batch, const Matrix& target);

// Layer-stack primitives shared by the autoencoder and the classifier head.

/// Runs `input` through the stack. When `trace` is non-null it receives the
/// input followed by every layer's post-activation output.
Matrix forward_layers(std::span<const DenseLayer> layers, const Matrix& input,
                      std::vector<Matrix>* trace = nullptr);

/// Backpropagates dL/d(final output) through a stack evaluated with
/// forward_layers(..., &trace). Returns dL/d(input).
Matrix backward_layers(std::span<const DenseLayer> layers, const std::vector<Matrix>& trace,
                       Matrix output_grad, GradientSet& grads);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::span<const DenseLayer> layers, AdamConfig config = {});
  explicit AdamState(const Network& net, AdamConfig config = {}) : AdamState(net.layers(), config) {}

  std::size_t steps() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  friend void optimizer_step(std::span<DenseLayer>, const GradientSet&, AdamState&, double);
  AdamConfig config_;
  GradientSet first_;
  GradientSet second_;
  std::size_t step_ = 0;
};

void optimizer_step(std::span<DenseLayer> layers, const GradientSet& grads, AdamState& state,
                    double learning_rate);
void optimizer_step(Network& net, const GradientSet& grads, AdamState& state, double learning_rate);

// AEN1 binary format: "AEN1", u32 layer count, then per layer u32 rows,
// u32 cols, u8 activation tag, rows*cols weights and rows bias values as
// little-endian f64. The encoder/decoder split is not stored; on load the
// encoder ends at the first layer whose output is the narrowest.
std::vector<std::uint8_t> serialize_network(const Network& net);
Network deserialize_network(std::span<const std::uint8_t> bytes);
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

/// FNV-1a over the serialized parameters.
std::uint64_t parameter_checksum(const Network& net);

}  // namespace icrst
