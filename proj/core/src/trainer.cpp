#include "icrst/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "json.hpp"

#include "icrst/error.hpp"

namespace icrst {
namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kSamplingStream = 2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (batch_size < 1) problems.emplace_back("batch_size must be >= 1");
  if (epochs < 1) problems.emplace_back("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    problems.emplace_back("learning_rate must be > 0");
  if (!(divergence_limit > 0.0)) problems.emplace_back("divergence_limit must be > 0");
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

std::string TrainReport::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["loss"] = e.loss;
    j["seconds"] = e.seconds;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<std::size_t> epoch_shuffle(std::size_t n, std::size_t epoch, std::uint64_t seed) {
  SeededRng rng(mix_seed(mix_seed(seed, kShuffleStream), epoch));
  return rng.permutation(n);
}

TrainResult train(Network net, const Matrix& data, const LabelVector* labels, const TrainConfig& cfg,
                  const StepObserver& observer) {
  cfg.validate();
  if (data.rows() == 0) throw EmptyInputError("train: dataset has no rows");
  if (data.cols() != net.input_dim()) {
    throw ShapeError("train: data is " + data.shape() + " but network expects " +
                     std::to_string(net.input_dim()) + " columns");
  }
  std::optional<ClassIndex> class_index;
  TargetSelection selection;
  selection.dataset_size = data.rows();
  selection.per_sample_flag = cfg.per_sample_flag;
  if (cfg.mode.needs_labels()) {
    if (labels == nullptr) throw ConfigError("ICRST training requires class labels");
    if (labels->size() != data.rows()) {
      throw ShapeError("train: " + std::to_string(labels->size()) + " labels for " +
                       std::to_string(data.rows()) + " rows");
    }
    class_index.emplace(*labels);
    selection.labels = labels;
    selection.class_index = &*class_index;
  }

  SeededRng sampler(mix_seed(cfg.seed, kSamplingStream));
  AdamState adam(net);
  TrainReport report;
  const auto t_start = Clock::now();
  const std::size_t n = data.rows();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    const auto order = epoch_shuffle(n, epoch, cfg.seed);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      const auto targets = select_targets(rows, cfg.mode, selection, sampler);
      const Matrix batch = data.gather_rows(rows);
      const Matrix target = data.gather_rows(targets);
      auto step = loss_and_gradients(net, batch, target);
      if (!std::isfinite(step.loss) || step.loss > cfg.divergence_limit) {
        throw DivergenceError(report.steps, step.loss,
                              "training diverged at step " + std::to_string(report.steps) +
                                  " (epoch " + std::to_string(epoch) +
                                  "): loss = " + std::to_string(step.loss));
      }
      optimizer_step(net, step.gradients, adam, cfg.learning_rate);
      loss_sum += step.loss * static_cast<double>(rows.size());
      ++report.steps;
      if (observer) observer(report.steps, net);
    }
    report.epochs.push_back({epoch, loss_sum / static_cast<double>(n), seconds_since(t_epoch)});
  }
  report.wall_seconds = seconds_since(t_start);
  report.checksum = parameter_checksum(net);
  return {std::move(net), std::move(report)};
}

}  // namespace icrst
