#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "json.hpp"

#include "icrst/error.hpp"
#include "icrst/experiment.hpp"

namespace icrst {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string format_p(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

Network build_network(const ExperimentConfig& cfg, std::size_t input_dim) {
  Architecture arch = cfg.preset ? breastcancer_architecture(input_dim) : cfg.architecture;
  arch.input_dim = input_dim;
  if (arch.latent_dim >= input_dim)
    throw ConfigError("invalid experiment config (1 problem):\n  - architecture.latent " +
                      std::to_string(arch.latent_dim) + " must be below the input width " +
                      std::to_string(input_dim));
  return Network::build(arch, mix_seed(cfg.seed, 100));
}

TrainingMode mode_from(const std::string& name, double p) {
  if (name == "standard") return TrainingMode::standard();
  if (name == "trst") return TrainingMode::trst();
  return TrainingMode::icrst(p);
}

std::optional<LabelVector> train_labels(const PreparedData& data) {
  if (!data.raw.labels) return std::nullopt;
  return data.raw.labels->gather(data.train_rows);
}

void write_latents(const fs::path& path, const Matrix& latents, const PreparedData& data) {
  std::vector<char> is_train(data.raw.rows(), 0);
  for (auto r : data.train_rows) is_train[r] = 1;
  auto out = open_out(path);
  out << "row,split,label";
  for (std::size_t k = 0; k < latents.cols(); ++k) out << ",z" << k;
  out << '\n';
  for (std::size_t r = 0; r < latents.rows(); ++r) {
    out << r << ',' << (is_train[r] ? "train" : "test") << ',';
    if (data.raw.labels) out << (*data.raw.labels)[r];
    for (double v : latents.row(r)) out << ',' << v;
    out << '\n';
  }
}

// Loads a run's network after checking the manifest entry against the file.
Network load_checked(const RunManifest& manifest, const RunRecord& run) {
  const std::string rel = run.artifact("network");
  if (rel.empty()) throw ManifestError("run " + run.name + " lists no network artifact");
  const fs::path path = manifest.output_dir / rel;
  if (!fs::exists(path)) throw ManifestError("run " + run.name + ": missing network file " + path.string());
  for (const auto& [label, hash] : run.hashes) {
    if (label == "network" && sha256_hex(path) != hash)
      throw ManifestError("run " + run.name + ": network hash mismatch for " + path.string());
  }
  return load_network(path);
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  const auto& ds = cfg.dataset;
  RawDataset raw;
  switch (ds.kind) {
    case DatasetConfig::Kind::Gaussians:
      raw = synth_gaussians(ds.classes, ds.means, ds.stds, ds.per_class, mix_seed(cfg.seed, 200));
      break;
    case DatasetConfig::Kind::Circle:
      raw = synth_circle(ds.radius, ds.noise, ds.count, mix_seed(cfg.seed, 201));
      break;
    case DatasetConfig::Kind::Idx:
      raw = load_idx(ds.images, ds.labels);
      break;
    case DatasetConfig::Kind::Csv:
      raw = load_csv(ds.csv, ds.unlabeled ? std::string() : ds.label_column);
      break;
  }
  if (ds.unlabeled) raw.labels.reset();

  PreparedData out;
  if (ds.train_count) {
    std::vector<std::size_t> train, test;
    if (raw.labels) {
      auto split = stratified_split(*raw.labels, *ds.train_count, *ds.test_count, mix_seed(cfg.seed, 300));
      train = std::move(split.train);
      test = std::move(split.test);
    } else {
      if (*ds.train_count + *ds.test_count > raw.rows())
        throw ConfigError("dataset.split asks for more rows than the dataset has");
      SeededRng rng(mix_seed(cfg.seed, 300));
      auto perm = rng.permutation(raw.rows());
      train.assign(perm.begin(), perm.begin() + *ds.train_count);
      test.assign(perm.begin() + *ds.train_count, perm.begin() + *ds.train_count + *ds.test_count);
      std::sort(train.begin(), train.end());
      std::sort(test.begin(), test.end());
    }
    std::vector<std::size_t> rows = train;
    rows.insert(rows.end(), test.begin(), test.end());
    raw = raw.subset(rows);
    out.train_rows.resize(train.size());
    std::iota(out.train_rows.begin(), out.train_rows.end(), 0);
    const bool all = cfg.feature_rows == "all";
    out.feature_rows.resize(all ? rows.size() : test.size());
    std::iota(out.feature_rows.begin(), out.feature_rows.end(), all ? 0 : train.size());
  } else {
    out.train_rows.resize(raw.rows());
    std::iota(out.train_rows.begin(), out.train_rows.end(), 0);
    out.feature_rows = out.train_rows;
  }

  out.inputs = preprocess(raw, ds.preprocess, out.train_rows);
  switch (ds.preprocess.kind) {
    case PreprocessSpec::Kind::Image: {
      out.images = raw.features;
      for (std::size_t r = 0; r < out.images.rows(); ++r)
        for (double& v : out.images.row(r)) v /= 255.0;
      break;
    }
    case PreprocessSpec::Kind::Tabular:
      out.images = out.inputs;
      break;
    case PreprocessSpec::Kind::None:
      out.images = raw.features;
      break;
  }
  out.raw = std::move(raw);
  return out;
}

std::vector<RunSpec> expand_runs(const ExperimentConfig& cfg) {
  std::vector<RunSpec> runs;
  const std::string seed = "_seed" + std::to_string(cfg.seed);
  for (const auto& m : cfg.modes) {
    if (m == "icrst") {
      for (double p : cfg.p_grid) runs.push_back({"icrst_p" + format_p(p) + seed, TrainingMode::icrst(p)});
    } else if (m == "standard") {
      runs.push_back({"standard_p0" + seed, TrainingMode::standard()});
    } else if (m == "trst") {
      runs.push_back({"trst_p1" + seed, TrainingMode::trst()});
    } else {
      throw ConfigError("unknown mode '" + m + "'");
    }
  }
  return runs;
}

std::string RunRecord::artifact(const std::string& label) const {
  for (const auto& [l, p] : artifacts)
    if (l == label) return p;
  return {};
}

std::string RunManifest::to_json() const {
  json j;
  j["output_dir"] = output_dir.string();
  j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  json runs_j = json::array();
  for (const auto& r : runs) {
    json rj{{"name", r.name}, {"mode", r.mode}, {"p", r.p}, {"seed", r.seed}, {"ok", r.ok}};
    if (!r.ok) rj["error"] = r.error;
    rj["seconds"] = r.seconds;
    rj["final_loss"] = r.final_loss;
    rj["checksum"] = r.checksum;
    json art = json::object(), hashes = json::object();
    for (const auto& [l, p] : r.artifacts) art[l] = p;
    for (const auto& [l, h] : r.hashes) hashes[l] = h;
    rj["artifacts"] = art;
    rj["sha256"] = hashes;
    runs_j.push_back(rj);
  }
  j["runs"] = runs_j;
  return j.dump(2);
}

void RunManifest::write(const fs::path& path) const { write_text(path, to_json()); }

RunManifest RunManifest::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ManifestError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  RunManifest m;
  // Artifact paths are relative to the manifest's own directory.
  m.output_dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  try {
    m.config_json = j.at("config").dump(2);
    for (const auto& rj : j.at("runs")) {
      RunRecord r;
      r.name = rj.at("name").get<std::string>();
      r.mode = rj.at("mode").get<std::string>();
      r.p = rj.at("p").get<double>();
      r.seed = rj.at("seed").get<std::uint64_t>();
      r.ok = rj.at("ok").get<bool>();
      if (rj.contains("error")) r.error = rj["error"].get<std::string>();
      r.seconds = rj.value("seconds", 0.0);
      r.final_loss = rj.value("final_loss", 0.0);
      r.checksum = rj.value("checksum", std::string());
      for (const auto& [l, p] : rj.at("artifacts").items()) r.artifacts.emplace_back(l, p.get<std::string>());
      for (const auto& [l, h] : rj.at("sha256").items()) r.hashes.emplace_back(l, h.get<std::string>());
      m.runs.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ManifestError("manifest " + path.string() + " is malformed: " + e.what());
  }
  return m;
}

void RunManifest::verify() const {
  for (const auto& r : runs) {
    for (const auto& [label, rel] : r.artifacts) {
      const fs::path path = output_dir / rel;
      if (!fs::exists(path)) throw ManifestError("run " + r.name + ": missing " + label + " file " + path.string());
      for (const auto& [hl, hash] : r.hashes) {
        if (hl == label && sha256_hex(path) != hash)
          throw ManifestError("run " + r.name + ": " + label + " hash mismatch for " + path.string());
      }
    }
  }
}

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ManifestError("cannot open " + file.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

RunManifest cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const PreparedData data = prepare_data(cfg);
  const auto specs = expand_runs(cfg);
  const Matrix train_x = data.inputs.gather_rows(data.train_rows);
  const auto labels = train_labels(data);
  const Network init = build_network(cfg, data.inputs.cols());

  std::vector<RunRecord> records(specs.size());
  parallel_for(specs.size(), cfg.workers, [&](std::size_t i) {
    const auto& spec = specs[i];
    RunRecord& rec = records[i];
    rec.name = spec.name;
    rec.mode = spec.mode.name();
    rec.p = spec.mode.p();
    rec.seed = cfg.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      TrainConfig tc = cfg.training;
      tc.mode = spec.mode;
      tc.seed = cfg.seed;
      auto result = train(init, train_x, labels ? &*labels : nullptr, tc);
      const fs::path dir = fs::path("runs") / spec.name;
      const fs::path abs = cfg.output_dir / dir;
      fs::create_directories(abs);
      save_network(result.network, abs / "network.aen");
      write_text(abs / "loss.jsonl", result.report.to_jsonl());
      write_latents(abs / "latents.csv", encode(result.network, data.inputs), data);
      for (const char* label : {"network", "loss", "latents"}) {
        const std::string file = std::string(label) == "network" ? "network.aen"
                                 : std::string(label) == "loss"  ? "loss.jsonl"
                                                                 : "latents.csv";
        rec.artifacts.emplace_back(label, (dir / file).generic_string());
        rec.hashes.emplace_back(label, sha256_hex(abs / file));
      }
      rec.final_loss = result.report.epochs.empty() ? 0.0 : result.report.epochs.back().loss;
      std::ostringstream cs;
      cs << std::hex << std::setw(16) << std::setfill('0') << result.report.checksum;
      rec.checksum = cs.str();
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  RunManifest manifest;
  manifest.output_dir = cfg.output_dir;
  manifest.config_json = cfg.to_json();
  manifest.runs = std::move(records);
  manifest.write(cfg.output_dir / "manifest.json");
  return manifest;
}

EvaluationResult cmd_evaluate(const ExperimentConfig& cfg, const RunManifest& manifest) {
  cfg.validate();
  if (cfg.classifiers.empty()) throw ConfigError("evaluation.classifiers is empty; nothing to evaluate");
  const PreparedData data = prepare_data(cfg);
  const Matrix feature_x = data.inputs.gather_rows(data.feature_rows);
  const LabelVector feature_y = data.raw.labels->gather(data.feature_rows);

  EvaluationResult result;
  json runs_j = json::array();
  std::ostringstream csv;
  csv << std::setprecision(10);
  csv << "mode,p,classifier,metric,mean,ci95\n";
  for (const auto& run : manifest.runs) {
    if (!run.ok) continue;
    const Network net = load_checked(manifest, run);
    const Matrix features = encode(net, feature_x);
    json reports = json::array();
    for (auto spec : cfg.classifiers) {
      spec.seed = cfg.seed;
      MetricReport report = cross_validate(spec, features, feature_y, cfg.folds, cfg.seed);
      for (auto& r : json::parse(report.to_json())) reports.push_back(r);
      const auto& m = report.metric(cfg.metric);
      csv << run.mode << ',' << format_p(run.p) << ',' << report.classifier << ',' << cfg.metric << ',' << m.mean
          << ',' << m.ci95 << '\n';
      result.reports.emplace_back(run.name, std::move(report));
    }
    runs_j.push_back({{"run", run.name}, {"mode", run.mode}, {"p", run.p}, {"reports", reports}});
  }
  result.metrics_json = manifest.output_dir / "metrics.json";
  result.sweep_csv = manifest.output_dir / "p_sweep.csv";
  write_text(result.metrics_json, json{{"metric", cfg.metric}, {"folds", cfg.folds}, {"runs", runs_j}}.dump(2));
  write_text(result.sweep_csv, csv.str());
  return result;
}

AnalysisResult cmd_analyze(const ExperimentConfig& cfg, const RunManifest& manifest) {
  cfg.validate();
  const PreparedData data = prepare_data(cfg);
  const auto& an = cfg.analysis;
  if (an.vector_field && data.inputs.cols() != 2) {
    throw DimensionError("analysis.vector_field needs a 2-D ambient space, data has " +
                         std::to_string(data.inputs.cols()) + " features");
  }
  const Matrix train_x = data.inputs.gather_rows(data.train_rows);
  const Matrix train_images = data.images.gather_rows(data.train_rows);
  const auto labels = train_labels(data);

  AnalysisResult result;
  json runs_j = json::array();
  for (const auto& run : manifest.runs) {
    if (!run.ok) continue;
    const Network net = load_checked(manifest, run);
    const fs::path dir = manifest.output_dir / "analysis" / run.name;
    AnalysisRunSummary s;
    s.run = run.name;
    s.mode = run.mode;
    s.p = run.p;
    json rj{{"run", run.name}, {"mode", run.mode}, {"p", run.p}};

    if (an.identity) {
      s.identity = reconstruction_identity(net, train_x);
      json ij{{"lhs", s.identity->lhs}, {"rhs", s.identity->rhs}, {"max_residual", s.identity->max_residual}};
      write_text(dir / "identity.json", ij.dump(2));
      rj["identity"] = ij;
    }
    if (an.mean_convergence) {
      s.convergence = check_mean_convergence(net, train_x, *labels);
      write_text(dir / "convergence.json", s.convergence->to_json());
      rj["convergence"] = json::parse(s.convergence->to_json())["mean_convergence"];
    }
    if (an.bound_trials && run.mode != "standard") {
      const TrainingMode mode = mode_from(run.mode, run.p);
      s.bound = check_loss_bound(net, train_x, labels ? &*labels : nullptr, mode, *an.bound_trials,
                                 mix_seed(cfg.seed, 400));
      write_text(dir / "bound.json", s.bound->to_json());
      rj["loss_bound"] = json::parse(s.bound->to_json())["loss_bound"];
    }
    if (an.contraction) {
      s.contraction = contraction_ratio(net, train_x, *labels);
      json cj{{"contraction_ratio", *s.contraction}};
      write_text(dir / "contraction.json", cj.dump(2));
      rj["contraction_ratio"] = *s.contraction;
    }
    if (an.mutual_information) {
      MIConfig mc = *an.mutual_information;
      mc.seed = mix_seed(cfg.seed, 500);
      if (data.raw.layout) mc.channels = data.raw.layout->channels;
      s.mutual_information = estimate_mutual_information(net, train_x, train_images, mc);
      write_text(dir / "mi.json", s.mutual_information->to_json());
      rj["mutual_information"] = json::parse(s.mutual_information->to_json());
    }
    if (an.vector_field) {
      const auto grid = vector_field(net, *an.vector_field);
      auto csv = open_out(dir / "vector_field.csv");
      grid.write_csv(csv);
      auto svg = open_out(dir / "vector_field.svg");
      grid.write_svg(svg, an.arrow_scale);
    }
    if (an.pca) {
      const Matrix proj = pca_project(encode(net, train_x), 2);
      auto csv = open_out(dir / "pca.csv");
      write_projection_csv(csv, proj, labels ? &*labels : nullptr);
    }
    runs_j.push_back(rj);
    result.runs.push_back(std::move(s));
  }
  result.summary_json = manifest.output_dir / "analysis.json";
  write_text(result.summary_json, json{{"runs", runs_j}}.dump(2));
  return result;
}

SweepResult cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepResult out;
  out.manifest = cmd_train(cfg);
  const RunManifest reread = RunManifest::read(cfg.output_dir / "manifest.json");
  if (!cfg.classifiers.empty()) out.evaluation = cmd_evaluate(cfg, reread);
  const auto& an = cfg.analysis;
  if (an.identity || an.mean_convergence || an.contraction || an.pca || an.bound_trials ||
      an.mutual_information || an.vector_field) {
    out.analysis = cmd_analyze(cfg, reread);
  }
  return out;
}

}  // namespace icrst
