#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

#include "icrst/error.hpp"
#include "icrst/experiment.hpp"

namespace icrst {
namespace {

// Accumulates problems while reading so one pass reports all of them.
class Reader {
 public:
  std::vector<std::string> problems;

  template <typename T>
  void get(const YAML::Node& node, const std::string& key, T& out, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      problems.push_back(where + key + ": cannot read value '" + scalar(v) + "'");
    }
  }

  template <typename T>
  void get_optional(const YAML::Node& node, const std::string& key, std::optional<T>& out,
                    const std::string& where) {
    if (!node[key]) return;
    T value{};
    get(node, key, value, where);
    out = value;
  }

  void check_keys(const YAML::Node& node, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!node.IsMap()) return;
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        problems.push_back(where + key + ": unknown key");
    }
  }

  static std::string scalar(const YAML::Node& v) {
    if (v.IsScalar()) return v.Scalar();
    std::ostringstream os;
    os << v;
    return os.str();
  }
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Appends the entries of a "header:\n  - a\n  - b" listing.
void append_listing(std::vector<std::string>& out, const std::string& listing, const std::string& prefix) {
  std::istringstream lines(listing);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto start = line.find_first_not_of(" -");
    if (start != std::string::npos) out.push_back(prefix + line.substr(start));
  }
}

std::string listing_message(const std::vector<std::string>& problems) {
  std::string msg = "invalid experiment config (" + std::to_string(problems.size()) + " problem" +
                    (problems.size() == 1 ? "" : "s") + "):";
  for (const auto& p : problems) msg += "\n  - " + p;
  return msg;
}

}  // namespace

bool ExperimentConfig::labeled() const {
  if (dataset.unlabeled) return false;
  if (dataset.kind == DatasetConfig::Kind::Csv) return !dataset.label_column.empty();
  return true;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  const auto& ds = dataset;
  switch (ds.kind) {
    case DatasetConfig::Kind::Gaussians:
      if (ds.classes == 0) problems.emplace_back("dataset.classes must be >= 1");
      if (ds.means.size() != ds.classes) problems.emplace_back("dataset.means needs one vector per class");
      if (ds.stds.size() != ds.classes) problems.emplace_back("dataset.stds needs one value per class");
      if (ds.per_class == 0) problems.emplace_back("dataset.per_class must be >= 1");
      for (const auto& m : ds.means)
        if (m.empty() || m.size() != ds.means.front().size()) {
          problems.emplace_back("dataset.means vectors must share one non-zero length");
          break;
        }
      break;
    case DatasetConfig::Kind::Circle:
      if (!(ds.radius > 0.0)) problems.emplace_back("dataset.radius must be > 0");
      if (!(ds.noise >= 0.0)) problems.emplace_back("dataset.noise must be >= 0");
      if (ds.count == 0) problems.emplace_back("dataset.count must be >= 1");
      break;
    case DatasetConfig::Kind::Idx:
      if (ds.images.empty() || !std::filesystem::exists(ds.images))
        problems.emplace_back("dataset.images: file not found: " + ds.images.string());
      if (ds.labels.empty() || !std::filesystem::exists(ds.labels))
        problems.emplace_back("dataset.labels: file not found: " + ds.labels.string());
      break;
    case DatasetConfig::Kind::Csv:
      if (ds.csv.empty() || !std::filesystem::exists(ds.csv))
        problems.emplace_back("dataset.path: file not found: " + ds.csv.string());
      break;
  }
  if (ds.train_count.has_value() != ds.test_count.has_value())
    problems.emplace_back("dataset.split needs both train and test counts");
  if (ds.train_count && *ds.train_count == 0) problems.emplace_back("dataset.split.train must be >= 1");

  if (!preset) {
    if (architecture.latent_dim == 0) problems.emplace_back("architecture.latent must be >= 1");
    // ambient width is only known up front for synthetic data
    std::size_t ambient = 0;
    if (ds.kind == DatasetConfig::Kind::Circle) ambient = 2;
    if (ds.kind == DatasetConfig::Kind::Gaussians && !ds.means.empty()) ambient = ds.means.front().size();
    if (ambient > 0 && architecture.latent_dim >= ambient)
      problems.emplace_back("architecture.latent " + std::to_string(architecture.latent_dim) +
                            " must be below the input width " + std::to_string(ambient));
    for (auto w : architecture.encoder_hidden)
      if (w == 0) problems.emplace_back("architecture.encoder widths must be >= 1");
    for (auto w : architecture.decoder_hidden)
      if (w == 0) problems.emplace_back("architecture.decoder widths must be >= 1");
  } else if (*preset != "breastcancer") {
    problems.emplace_back("architecture.preset: unknown preset '" + *preset + "'");
  }

  try {
    training.validate();
  } catch (const ConfigError& e) {
    append_listing(problems, e.what(), "training: ");
  }

  if (modes.empty()) problems.emplace_back("modes must list at least one of standard, icrst, trst");
  for (const auto& m : modes) {
    if (m != "standard" && m != "icrst" && m != "trst") problems.emplace_back("modes: unknown mode '" + m + "'");
    if (m == "icrst" && !labeled()) problems.emplace_back("modes: icrst needs a labeled dataset");
  }
  if (std::find(modes.begin(), modes.end(), "icrst") != modes.end() && p_grid.empty())
    problems.emplace_back("p_grid must not be empty when icrst is requested");
  for (double p : p_grid)
    if (!(p >= 0.0 && p <= 1.0)) problems.emplace_back("p_grid value " + std::to_string(p) + " outside [0,1]");

  if (!classifiers.empty()) {
    if (!labeled()) problems.emplace_back("evaluation.classifiers need a labeled dataset");
    if (folds < 2) problems.emplace_back("evaluation.folds must be >= 2");
    if (metric != "accuracy" && metric != "macro_f1") problems.emplace_back("evaluation.metric must be accuracy or macro_f1");
    for (const auto& c : classifiers) {
      try {
        c.validate();
      } catch (const ConfigError& e) {
        problems.emplace_back(std::string("evaluation.classifiers: ") + e.what());
      }
    }
  }
  if (!feature_rows.empty() && feature_rows != "heldout" && feature_rows != "all")
    problems.emplace_back("evaluation.features must be heldout or all");
  if (feature_rows == "heldout" && !ds.train_count)
    problems.emplace_back("evaluation.features=heldout needs dataset.split");

  const auto& an = analysis;
  if (!labeled()) {
    if (an.mean_convergence) problems.emplace_back("analysis.mean_convergence needs a labeled dataset");
    if (an.contraction) problems.emplace_back("analysis.contraction needs a labeled dataset");
  }
  if (an.bound_trials && *an.bound_trials == 0) problems.emplace_back("analysis.loss_bound.trials must be >= 1");
  if (an.mutual_information) {
    const auto& mi = *an.mutual_information;
    if (mi.samples == 0) problems.emplace_back("analysis.mutual_information.samples must be >= 1");
    if (mi.neighbors == 0) problems.emplace_back("analysis.mutual_information.neighbors must be >= 1");
    if (mi.bins < 2) problems.emplace_back("analysis.mutual_information.bins must be >= 2");
  }
  if (an.vector_field && an.vector_field->steps == 0) problems.emplace_back("analysis.vector_field.steps must be >= 1");
  const std::size_t latent = preset ? 8 : architecture.latent_dim;
  if (an.pca && latent < 2) problems.emplace_back("analysis.pca needs a latent width of at least 2");
  if (workers == 0) problems.emplace_back("workers must be >= 1");

  if (!problems.empty()) throw ConfigError(listing_message(problems));
}

std::string ExperimentConfig::to_json() const {
  using json = nlohmann::ordered_json;
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["workers"] = workers;
  json d;
  const char* kinds[] = {"gaussians", "circle", "idx", "csv"};
  d["kind"] = kinds[static_cast<int>(dataset.kind)];
  switch (dataset.kind) {
    case DatasetConfig::Kind::Gaussians:
      d["classes"] = dataset.classes;
      d["means"] = dataset.means;
      d["stds"] = dataset.stds;
      d["per_class"] = dataset.per_class;
      break;
    case DatasetConfig::Kind::Circle:
      d["radius"] = dataset.radius;
      d["noise"] = dataset.noise;
      d["count"] = dataset.count;
      break;
    case DatasetConfig::Kind::Idx:
      d["images"] = dataset.images.string();
      d["labels"] = dataset.labels.string();
      break;
    case DatasetConfig::Kind::Csv:
      d["path"] = dataset.csv.string();
      d["label_column"] = dataset.label_column;
      break;
  }
  d["unlabeled"] = dataset.unlabeled;
  const char* pre[] = {"image", "tabular", "none"};
  d["preprocess"] = pre[static_cast<int>(dataset.preprocess.kind)];
  if (dataset.train_count) d["split"] = {{"train", *dataset.train_count}, {"test", *dataset.test_count}};
  j["dataset"] = d;
  json a;
  if (preset) a["preset"] = *preset;
  a["encoder"] = architecture.encoder_hidden;
  a["latent"] = architecture.latent_dim;
  a["decoder"] = architecture.decoder_hidden;
  a["hidden_activation"] = to_string(architecture.hidden_activation);
  a["latent_activation"] = to_string(architecture.latent_activation);
  a["output_activation"] = to_string(architecture.output_activation);
  j["architecture"] = a;
  j["training"] = {{"learning_rate", training.learning_rate},
                   {"batch_size", training.batch_size},
                   {"epochs", training.epochs},
                   {"per_sample_flag", training.per_sample_flag}};
  j["modes"] = modes;
  j["p_grid"] = p_grid;
  json cls = json::array();
  for (const auto& c : classifiers) {
    json cj{{"kind", c.name()}};
    if (c.kind == ClassifierSpec::Kind::Knn) cj["k"] = c.k;
    if (c.kind == ClassifierSpec::Kind::Mlp) {
      cj["hidden"] = c.hidden;
      cj["epochs"] = c.epochs;
      cj["learning_rate"] = c.learning_rate;
      cj["batch_size"] = c.batch_size;
    }
    cls.push_back(cj);
  }
  j["evaluation"] = {{"folds", folds}, {"metric", metric}, {"features", feature_rows}, {"classifiers", cls}};
  json an;
  an["mean_convergence"] = analysis.mean_convergence;
  an["identity"] = analysis.identity;
  an["contraction"] = analysis.contraction;
  an["pca"] = analysis.pca;
  if (analysis.bound_trials) an["loss_bound"] = {{"trials", *analysis.bound_trials}};
  if (analysis.mutual_information) {
    const auto& mi = *analysis.mutual_information;
    an["mutual_information"] = {{"samples", mi.samples}, {"neighbors", mi.neighbors}, {"bins", mi.bins}};
  }
  if (analysis.vector_field) {
    const auto& g = *analysis.vector_field;
    an["vector_field"] = {{"x", {g.x_min, g.x_max}}, {"y", {g.y_min, g.y_max}}, {"steps", g.steps},
                          {"arrow_scale", analysis.arrow_scale}};
  }
  j["analysis"] = an;
  return j.dump(2);
}

ExperimentConfig parse_experiment_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a key-value mapping");

  Reader rd;
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  rd.check_keys(root, {"name", "seed", "output_dir", "workers", "dataset", "architecture", "training", "modes",
                       "p_grid", "evaluation", "analysis"},
                "");
  rd.get(root, "name", cfg.name, "");
  rd.get(root, "seed", cfg.seed, "");
  rd.get(root, "workers", cfg.workers, "");
  std::string out_dir = cfg.output_dir.string();
  rd.get(root, "output_dir", out_dir, "");
  cfg.output_dir = resolve(base_dir, out_dir);

  // dataset
  const YAML::Node ds = root["dataset"];
  if (!ds || !ds.IsMap()) {
    rd.problems.emplace_back("dataset: missing section");
  } else {
    rd.check_keys(ds, {"kind", "classes", "means", "stds", "per_class", "radius", "noise", "count", "images",
                       "labels", "path", "label_column", "unlabeled", "preprocess", "split"},
                  "dataset.");
    std::string kind;
    rd.get(ds, "kind", kind, "dataset.");
    auto& d = cfg.dataset;
    if (kind == "gaussians") d.kind = DatasetConfig::Kind::Gaussians;
    else if (kind == "circle") d.kind = DatasetConfig::Kind::Circle;
    else if (kind == "idx") d.kind = DatasetConfig::Kind::Idx;
    else if (kind == "csv") d.kind = DatasetConfig::Kind::Csv;
    else rd.problems.push_back("dataset.kind: expected gaussians, circle, idx or csv, got '" + kind + "'");
    rd.get(ds, "classes", d.classes, "dataset.");
    rd.get(ds, "means", d.means, "dataset.");
    rd.get(ds, "stds", d.stds, "dataset.");
    rd.get(ds, "per_class", d.per_class, "dataset.");
    rd.get(ds, "radius", d.radius, "dataset.");
    rd.get(ds, "noise", d.noise, "dataset.");
    rd.get(ds, "count", d.count, "dataset.");
    std::string images, labels, path;
    rd.get(ds, "images", images, "dataset.");
    rd.get(ds, "labels", labels, "dataset.");
    rd.get(ds, "path", path, "dataset.");
    d.images = resolve(base_dir, images);
    d.labels = resolve(base_dir, labels);
    d.csv = resolve(base_dir, path);
    rd.get(ds, "label_column", d.label_column, "dataset.");
    rd.get(ds, "unlabeled", d.unlabeled, "dataset.");
    std::string pre = "none";
    rd.get(ds, "preprocess", pre, "dataset.");
    if (pre == "image") d.preprocess.kind = PreprocessSpec::Kind::Image;
    else if (pre == "tabular") d.preprocess.kind = PreprocessSpec::Kind::Tabular;
    else if (pre == "none") d.preprocess.kind = PreprocessSpec::Kind::None;
    else rd.problems.push_back("dataset.preprocess: expected image, tabular or none, got '" + pre + "'");
    if (const YAML::Node split = ds["split"]) {
      rd.check_keys(split, {"train", "test"}, "dataset.split.");
      rd.get_optional(split, "train", d.train_count, "dataset.split.");
      rd.get_optional(split, "test", d.test_count, "dataset.split.");
    }
  }

  // architecture
  const YAML::Node arch = root["architecture"];
  if (!arch || !arch.IsMap()) {
    rd.problems.emplace_back("architecture: missing section");
  } else {
    rd.check_keys(arch, {"preset", "encoder", "latent", "decoder", "hidden_activation", "latent_activation",
                         "output_activation"},
                  "architecture.");
    rd.get_optional(arch, "preset", cfg.preset, "architecture.");
    auto& a = cfg.architecture;
    rd.get(arch, "encoder", a.encoder_hidden, "architecture.");
    rd.get(arch, "latent", a.latent_dim, "architecture.");
    rd.get(arch, "decoder", a.decoder_hidden, "architecture.");
    for (auto [key, slot] : {std::pair{"hidden_activation", &a.hidden_activation},
                             std::pair{"latent_activation", &a.latent_activation},
                             std::pair{"output_activation", &a.output_activation}}) {
      std::string name;
      rd.get(arch, key, name, "architecture.");
      if (name.empty()) continue;
      try {
        *slot = parse_activation(name);
      } catch (const ConfigError& e) {
        rd.problems.push_back(std::string("architecture.") + key + ": " + e.what());
      }
    }
  }

  // training
  if (const YAML::Node tr = root["training"]) {
    rd.check_keys(tr, {"learning_rate", "batch_size", "epochs", "per_sample_flag", "divergence_limit"}, "training.");
    rd.get(tr, "learning_rate", cfg.training.learning_rate, "training.");
    rd.get(tr, "batch_size", cfg.training.batch_size, "training.");
    rd.get(tr, "epochs", cfg.training.epochs, "training.");
    rd.get(tr, "per_sample_flag", cfg.training.per_sample_flag, "training.");
    rd.get(tr, "divergence_limit", cfg.training.divergence_limit, "training.");
  }
  rd.get(root, "modes", cfg.modes, "");
  rd.get(root, "p_grid", cfg.p_grid, "");

  // evaluation
  if (const YAML::Node ev = root["evaluation"]) {
    rd.check_keys(ev, {"folds", "metric", "features", "classifiers"}, "evaluation.");
    rd.get(ev, "folds", cfg.folds, "evaluation.");
    rd.get(ev, "metric", cfg.metric, "evaluation.");
    rd.get(ev, "features", cfg.feature_rows, "evaluation.");
    if (const YAML::Node cls = ev["classifiers"]) {
      std::size_t i = 0;
      for (const auto& c : cls) {
        const std::string where = "evaluation.classifiers[" + std::to_string(i++) + "].";
        rd.check_keys(c, {"kind", "k", "hidden", "epochs", "learning_rate", "batch_size"}, where);
        std::string kind;
        rd.get(c, "kind", kind, where);
        ClassifierSpec spec;
        if (kind == "knn") spec = ClassifierSpec::knn();
        else if (kind == "gaussian_nb") spec = ClassifierSpec::gaussian_nb();
        else if (kind == "mlp") spec = ClassifierSpec::mlp();
        else if (kind == "majority") spec = ClassifierSpec::majority();
        else {
          rd.problems.push_back(where + "kind: expected knn, gaussian_nb, mlp or majority, got '" + kind + "'");
          continue;
        }
        rd.get(c, "k", spec.k, where);
        rd.get(c, "hidden", spec.hidden, where);
        rd.get(c, "epochs", spec.epochs, where);
        rd.get(c, "learning_rate", spec.learning_rate, where);
        rd.get(c, "batch_size", spec.batch_size, where);
        cfg.classifiers.push_back(spec);
      }
    }
  }

  // analysis
  if (const YAML::Node an = root["analysis"]) {
    rd.check_keys(an, {"mean_convergence", "identity", "contraction", "pca", "loss_bound", "mutual_information",
                       "vector_field"},
                  "analysis.");
    auto& a = cfg.analysis;
    rd.get(an, "mean_convergence", a.mean_convergence, "analysis.");
    rd.get(an, "identity", a.identity, "analysis.");
    rd.get(an, "contraction", a.contraction, "analysis.");
    rd.get(an, "pca", a.pca, "analysis.");
    if (const YAML::Node lb = an["loss_bound"]) {
      std::size_t trials = 10000;
      if (lb.IsMap()) rd.get(lb, "trials", trials, "analysis.loss_bound.");
      if (!lb.IsScalar() || lb.as<std::string>() != "false") a.bound_trials = trials;
    }
    if (const YAML::Node mi = an["mutual_information"]) {
      MIConfig m;
      if (mi.IsMap()) {
        rd.check_keys(mi, {"samples", "neighbors", "bins", "channels"}, "analysis.mutual_information.");
        rd.get(mi, "samples", m.samples, "analysis.mutual_information.");
        rd.get(mi, "neighbors", m.neighbors, "analysis.mutual_information.");
        rd.get(mi, "bins", m.bins, "analysis.mutual_information.");
        rd.get(mi, "channels", m.channels, "analysis.mutual_information.");
      }
      if (!mi.IsScalar() || mi.as<std::string>() != "false") a.mutual_information = m;
    }
    if (const YAML::Node vf = an["vector_field"]) {
      GridSpec g;
      std::vector<double> xr{g.x_min, g.x_max}, yr{g.y_min, g.y_max};
      rd.check_keys(vf, {"x", "y", "steps", "arrow_scale"}, "analysis.vector_field.");
      rd.get(vf, "x", xr, "analysis.vector_field.");
      rd.get(vf, "y", yr, "analysis.vector_field.");
      rd.get(vf, "steps", g.steps, "analysis.vector_field.");
      rd.get(vf, "arrow_scale", a.arrow_scale, "analysis.vector_field.");
      if (xr.size() != 2 || yr.size() != 2) {
        rd.problems.emplace_back("analysis.vector_field: x and y must be [min, max] pairs");
      } else {
        g.x_min = xr[0], g.x_max = xr[1], g.y_min = yr[0], g.y_max = yr[1];
      }
      a.vector_field = g;
    }
  }

  std::vector<std::string> all = rd.problems;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    append_listing(all, e.what(), "");
  }
  if (!all.empty()) throw ConfigError(listing_message(all));
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace icrst
