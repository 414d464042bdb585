#pragma once

// Config-driven experiment runner behind the `icrst` command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icrst/analysis.hpp"
#include "icrst/data.hpp"
#include "icrst/eval.hpp"
#include "icrst/nn.hpp"
#include "icrst/trainer.hpp"

namespace icrst {

struct DatasetConfig {
  enum class Kind { Gaussians, Circle, Idx, Csv };
  Kind kind = Kind::Gaussians;
  // gaussians
  std::size_t classes = 2;
  std::vector<Vector> means;
  std::vector<double> stds;
  std::size_t per_class = 100;
  // circle
  double radius = 1.0;
  double noise = 0.0;
  std::size_t count = 1000;
  // idx / csv (resolved against the config file's directory)
  std::filesystem::path images;
  std::filesystem::path labels;
  std::filesystem::path csv;
  std::string label_column;

  bool unlabeled = false;
  PreprocessSpec preprocess;
  std::optional<std::size_t> train_count;  // held-out split when both are set
  std::optional<std::size_t> test_count;
};

struct AnalysisConfig {
  bool mean_convergence = false;
  bool identity = false;
  bool contraction = false;
  bool pca = false;
  std::optional<std::size_t> bound_trials;
  std::optional<MIConfig> mutual_information;
  std::optional<GridSpec> vector_field;
  double arrow_scale = 1.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::size_t workers = 1;
  std::filesystem::path base_dir = ".";  // relative paths resolve against this

  DatasetConfig dataset;
  std::optional<std::string> preset;
  Architecture architecture;
  TrainConfig training;

  std::vector<std::string> modes = {"standard", "icrst", "trst"};
  std::vector<double> p_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

  std::vector<ClassifierSpec> classifiers;
  std::size_t folds = 10;
  std::string metric = "accuracy";
  std::string feature_rows;  // "heldout" or "all"; empty picks heldout when a split exists

  AnalysisConfig analysis;

  bool labeled() const;
  /// Throws ConfigError listing every violation.
  void validate() const;
  std::string to_json() const;
};

/// Parses the YAML key-value config. Collects every problem it can find before
/// throwing one ConfigError.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& yaml_text, const std::filesystem::path& base_dir);

struct PreparedData {
  RawDataset raw;          // rows actually used (after subsetting)
  Matrix inputs;           // preprocessed network inputs
  Matrix images;           // [0,1]-scaled copy used for MI
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> feature_rows;  // rows classified downstream
};

PreparedData prepare_data(const ExperimentConfig& cfg);

struct RunSpec {
  std::string name;  // mode_p-value_seed, e.g. icrst_p0.2_seed7
  TrainingMode mode;
};

std::vector<RunSpec> expand_runs(const ExperimentConfig& cfg);

struct RunRecord {
  std::string name;
  std::string mode;
  double p = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double seconds = 0.0;
  double final_loss = 0.0;
  std::string checksum;
  // artifact label -> path relative to the output directory
  std::vector<std::pair<std::string, std::string>> artifacts;
  std::vector<std::pair<std::string, std::string>> hashes;  // artifact label -> sha256 hex

  std::string artifact(const std::string& label) const;
};

struct RunManifest {
  std::filesystem::path output_dir;
  std::string config_json;
  std::vector<RunRecord> runs;

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
  /// Throws ManifestError when a listed artifact is missing or its hash differs.
  void verify() const;
};

std::string sha256_hex(const std::filesystem::path& file);

RunManifest cmd_train(const ExperimentConfig& cfg);

struct EvaluationResult {
  std::filesystem::path metrics_json;
  std::filesystem::path sweep_csv;
  std::vector<std::pair<std::string, MetricReport>> reports;  // run name -> report
};

EvaluationResult cmd_evaluate(const ExperimentConfig& cfg, const RunManifest& manifest);

struct AnalysisRunSummary {
  std::string run;
  std::string mode;
  double p = 0.0;
  std::optional<ReconstructionIdentity> identity;
  std::optional<ConvergenceReport> convergence;
  std::optional<BoundReport> bound;
  std::optional<std::vector<double>> contraction;
  std::optional<MutualInformationEstimate> mutual_information;
};

struct AnalysisResult {
  std::filesystem::path summary_json;
  std::vector<AnalysisRunSummary> runs;
};

AnalysisResult cmd_analyze(const ExperimentConfig& cfg, const RunManifest& manifest);

struct SweepResult {
  RunManifest manifest;
  EvaluationResult evaluation;
  std::optional<AnalysisResult> analysis;
};

SweepResult cmd_sweep(const ExperimentConfig& cfg);

}  // namespace icrst
