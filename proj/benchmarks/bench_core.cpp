#include <benchmark/benchmark.h>

#include <vector>

#include "icrst/analysis.hpp"
#include "icrst/eval.hpp"
#include "icrst/nn.hpp"
#include "icrst/rng.hpp"

namespace {

using namespace icrst;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  SeededRng rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform01() * 2.0 - 1.0;
  return m;
}

Architecture mnist_arch() {
  Architecture a;
  a.input_dim = 784;
  a.encoder_hidden = {256};
  a.latent_dim = 32;
  a.decoder_hidden = {256};
  return a;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);

void BM_Forward(benchmark::State& state) {
  const auto net = Network::build(mnist_arch(), 3);
  const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 784, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(128)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  const auto net = Network::build(mnist_arch(), 3);
  const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 784, 4);
  const auto t = random_matrix(static_cast<std::size_t>(state.range(0)), 784, 5);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(net, x, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(128)->Arg(512);

void BM_AdamStep(benchmark::State& state) {
  auto net = Network::build(mnist_arch(), 3);
  const auto x = random_matrix(64, 784, 4);
  const auto grads = backward(net, x, x);
  AdamState adam(net);
  for (auto _ : state) optimizer_step(net, grads, adam, 1e-6);
}
BENCHMARK(BM_AdamStep);

void BM_PairMutualInformation(benchmark::State& state) {
  auto a = random_matrix(1, 784, 6), b = random_matrix(1, 784, 7);
  for (auto* m : {&a, &b})
    for (auto& v : m->values()) v = 0.5 * (v + 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(histogram_mutual_information(a.values(), b.values(), 32));
}
BENCHMARK(BM_PairMutualInformation);

void BM_Knn(benchmark::State& state) {
  const auto train_x = random_matrix(1800, 32, 8), test_x = random_matrix(200, 32, 9);
  std::vector<std::size_t> ids(1800);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i % 10;
  const LabelVector y(ids, 10);
  for (auto _ : state) benchmark::DoNotOptimize(fit_predict(ClassifierSpec::knn(5), train_x, y, test_x));
}
BENCHMARK(BM_Knn);

}  // namespace

BENCHMARK_MAIN();
