#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "icrst/ndcore.hpp"
#include "icrst/nn.hpp"
#include "icrst/sampling.hpp"

namespace icrst {

struct TrainConfig {
  TrainingMode mode = TrainingMode::standard();
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  bool per_sample_flag = false;
  double divergence_limit = 1e6;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // row-weighted mean of the step losses
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;
  std::uint64_t checksum = 0;
  std::size_t steps = 0;

  /// One {"epoch","loss","seconds"} object per line.
  std::string to_jsonl() const;
};

struct TrainResult {
  Network network;
  TrainReport report;
};

/// Deterministic permutation of [0, n) for a (seed, epoch) pair.
std::vector<std::size_t> epoch_shuffle(std::size_t n, std::size_t epoch, std::uint64_t seed);

using StepObserver = std::function<void(std::size_t step, const Network& net)>;

/// Trains in place of a copy of `net`. Labels are required for ICRST only and
/// are never read otherwise. Throws DivergenceError when a step loss is
/// non-finite or exceeds cfg.divergence_limit.
TrainResult train(Network net, const Matrix& data, const LabelVector* labels, const TrainConfig& cfg,
                  const StepObserver& observer = {});
inline TrainResult train(Network net, const Matrix& data, const TrainConfig& cfg) {
  return train(std::move(net), data, nullptr, cfg);
}
inline TrainResult train(Network net, const Matrix& data, const LabelVector& labels,
                         const TrainConfig& cfg) {
  return train(std::move(net), data, &labels, cfg);
}

}  // namespace icrst
