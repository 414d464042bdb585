#include "icrst/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "icrst/error.hpp"
#include "icrst/rng.hpp"

namespace icrst {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& file) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(file + ": truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

RawDataset RawDataset::subset(std::span<const std::size_t> rows) const {
  RawDataset out;
  out.features = features.gather_rows(rows);
  if (labels) out.labels = labels->gather(rows);
  out.layout = layout;
  out.name = name;
  return out;
}

void RawDataset::validate() const {
  if (layout && layout->size() != features.cols()) {
    throw ShapeError(name + ": layout " + std::to_string(layout->channels) + "x" +
                     std::to_string(layout->height) + "x" + std::to_string(layout->width) +
                     " does not match feature width " + std::to_string(features.cols()));
  }
  if (labels && labels->size() != features.rows()) {
    throw ShapeError(name + ": " + std::to_string(labels->size()) + " labels for " +
                     std::to_string(features.rows()) + " rows");
  }
}

RawDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);
  const std::string img_name = images.filename().string();
  const std::string lab_name = labels.filename().string();

  const std::uint32_t img_magic = read_be32(img, 0, img_name);
  if (img_magic != 0x00000803) {
    std::ostringstream msg;
    msg << img_name << ": bad magic 0x" << std::hex << img_magic << " at byte offset 0 (expected 0x00000803)";
    throw FormatError(msg.str());
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, lab_name);
  if (lab_magic != 0x00000801) {
    std::ostringstream msg;
    msg << lab_name << ": bad magic 0x" << std::hex << lab_magic << " at byte offset 0 (expected 0x00000801)";
    throw FormatError(msg.str());
  }
  const std::size_t count = read_be32(img, 4, img_name);
  const std::size_t rows = read_be32(img, 8, img_name);
  const std::size_t cols = read_be32(img, 12, img_name);
  const std::size_t label_count = read_be32(lab, 4, lab_name);
  if (count != label_count) {
    throw IntegrityError(img_name + " holds " + std::to_string(count) + " images but " + lab_name + " holds " +
                         std::to_string(label_count) + " labels");
  }
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) {
    throw FormatError(img_name + ": truncated pixel data at byte offset " + std::to_string(img.size()));
  }
  if (lab.size() < 8 + count) {
    throw FormatError(lab_name + ": truncated label data at byte offset " + std::to_string(lab.size()));
  }

  RawDataset ds;
  ds.name = img_name;
  std::vector<double> values(count * pixels);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(img[16 + i]);
  ds.features = Matrix(count, pixels, std::move(values));
  std::vector<std::size_t> ids(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  ds.labels = LabelVector::from_ids(std::move(ids));
  ds.layout = ChannelLayout{1, rows, cols};
  return ds;
}

RawDataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const std::string file = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(file + ": missing header row");
  const auto header = split_csv_line(line);

  std::optional<std::size_t> label_idx;
  if (!label_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw ConfigError(file + ": label column '" + label_column + "' not in header");
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<double> values;
  std::vector<std::size_t> ids;
  std::map<std::string, std::size_t> label_ids;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(file + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (label_idx && c == *label_idx) {
        auto [it, inserted] = label_ids.try_emplace(cells[c], label_ids.size());
        ids.push_back(it->second);
        continue;
      }
      double v;
      if (!parse_double(cells[c], v)) {
        throw ParseError(file + ":" + std::to_string(line_no) + ": non-numeric cell '" + cells[c] +
                         "' in column '" + header[c] + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  RawDataset ds;
  ds.name = file;
  const std::size_t cols = header.size() - (label_idx ? 1 : 0);
  ds.features = Matrix(rows, cols, std::move(values));
  if (label_idx) ds.labels = LabelVector(std::move(ids), std::max<std::size_t>(1, label_ids.size()));
  return ds;
}

Preprocessor::Preprocessor(const RawDataset& ds, const PreprocessSpec& spec, std::span<const std::size_t> train_rows)
    : spec_(spec) {
  if (train_rows.empty()) throw EmptyInputError("preprocess: no training rows");
  const Matrix& x = ds.features;
  for (auto r : train_rows)
    if (r >= x.rows()) throw BoundsError("preprocess: training row " + std::to_string(r) + " out of range");
  switch (spec.kind) {
    case PreprocessSpec::Kind::None:
      return;
    case PreprocessSpec::Kind::Image: {
      channels_ = ds.layout ? ds.layout->channels : 1;
      if (channels_ == 0 || x.cols() % channels_ != 0) throw ShapeError("preprocess: bad channel layout");
      const std::size_t plane = x.cols() / channels_;
      offset_.assign(channels_, 0.0);
      scale_.assign(channels_, 0.0);
      const double count = static_cast<double>(train_rows.size() * plane);
      for (std::size_t ch = 0; ch < channels_; ++ch) {
        double s = 0.0;
        for (auto r : train_rows)
          for (std::size_t k = 0; k < plane; ++k) s += x(r, ch * plane + k) / 255.0;
        const double mean = s / count;
        double ss = 0.0;
        for (auto r : train_rows)
          for (std::size_t k = 0; k < plane; ++k) {
            const double d = x(r, ch * plane + k) / 255.0 - mean;
            ss += d * d;
          }
        offset_[ch] = mean;
        scale_[ch] = std::max(std::sqrt(ss / count), spec.std_floor);
      }
      return;
    }
    case PreprocessSpec::Kind::Tabular: {
      offset_.assign(x.cols(), std::numeric_limits<double>::infinity());
      Vector hi(x.cols(), -std::numeric_limits<double>::infinity());
      for (auto r : train_rows)
        for (std::size_t k = 0; k < x.cols(); ++k) {
          offset_[k] = std::min(offset_[k], x(r, k));
          hi[k] = std::max(hi[k], x(r, k));
        }
      scale_.resize(x.cols());
      for (std::size_t k = 0; k < x.cols(); ++k) scale_[k] = hi[k] - offset_[k];
      return;
    }
  }
}

Matrix Preprocessor::apply(const Matrix& features) const {
  Matrix out = features;
  switch (spec_.kind) {
    case PreprocessSpec::Kind::None:
      break;
    case PreprocessSpec::Kind::Image: {
      if (out.cols() % channels_ != 0) throw ShapeError("preprocess: feature width not divisible by channels");
      const std::size_t plane = out.cols() / channels_;
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t k = 0; k < row.size(); ++k) {
          const std::size_t ch = k / plane;
          row[k] = (row[k] / 255.0 - offset_[ch]) / scale_[ch];
        }
      }
      break;
    }
    case PreprocessSpec::Kind::Tabular: {
      if (out.cols() != offset_.size()) throw ShapeError("preprocess: feature width changed since fitting");
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t k = 0; k < row.size(); ++k) {
          const double v = scale_[k] > 0.0 ? (row[k] - offset_[k]) / scale_[k] : 0.0;
          row[k] = std::clamp(v, 0.0, 1.0);
        }
      }
      break;
    }
  }
  return out;
}

Matrix preprocess(const RawDataset& ds, const PreprocessSpec& spec, std::span<const std::size_t> train_rows) {
  return Preprocessor(ds, spec, train_rows).apply(ds.features);
}

RawDataset synth_gaussians(std::size_t classes, const std::vector<Vector>& means, const std::vector<double>& stds,
                           std::size_t per_class, std::uint64_t seed) {
  std::vector<std::string> problems;
  if (classes == 0) problems.emplace_back("need at least one class");
  if (means.size() != classes) problems.emplace_back("means list has " + std::to_string(means.size()) +
                                                     " entries for " + std::to_string(classes) + " classes");
  if (stds.size() != classes) problems.emplace_back("stds list has " + std::to_string(stds.size()) +
                                                    " entries for " + std::to_string(classes) + " classes");
  for (std::size_t j = 0; j < means.size(); ++j)
    if (means[j].size() != means.front().size() || means[j].empty())
      problems.emplace_back("mean " + std::to_string(j) + " has inconsistent dimension");
  for (double s : stds)
    if (!(s >= 0.0)) problems.emplace_back("stds must be non-negative");
  if (!problems.empty()) {
    std::string msg = "synth_gaussians:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  const std::size_t d = means.front().size();
  SeededRng rng(seed);
  RawDataset ds;
  ds.name = "gaussians";
  ds.features = Matrix(classes * per_class, d);
  std::vector<std::size_t> ids;
  ids.reserve(classes * per_class);
  for (std::size_t j = 0; j < classes; ++j) {
    for (std::size_t i = 0; i < per_class; ++i) {
      auto row = ds.features.row(j * per_class + i);
      for (std::size_t k = 0; k < d; ++k) row[k] = means[j][k] + stds[j] * rng.normal();
      ids.push_back(j);
    }
  }
  ds.labels = LabelVector(std::move(ids), classes);
  return ds;
}

RawDataset synth_circle(double radius, double noise_std, std::size_t count, std::uint64_t seed) {
  if (!(radius > 0.0)) throw DomainError("synth_circle: radius must be positive");
  if (!(noise_std >= 0.0)) throw DomainError("synth_circle: noise must be non-negative");
  SeededRng rng(seed);
  RawDataset ds;
  ds.name = "circle";
  ds.features = Matrix(count, 2);
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = 2.0 * std::numbers::pi * rng.uniform01();
    ds.features(i, 0) = radius * std::cos(theta) + noise_std * rng.normal();
    ds.features(i, 1) = radius * std::sin(theta) + noise_std * rng.normal();
  }
  ds.labels = LabelVector(std::vector<std::size_t>(count, 0), 1);
  return ds;
}

StratifiedSplit stratified_split(const LabelVector& labels, std::size_t train_count, std::size_t test_count,
                                 std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (train_count + test_count > n) {
    throw ConfigError("stratified_split: requested " + std::to_string(train_count + test_count) + " of " +
                      std::to_string(n) + " rows");
  }
  SeededRng rng(seed);
  std::vector<std::vector<std::size_t>> members(labels.class_count());
  for (auto i : rng.permutation(n)) members[labels[i]].push_back(i);

  // Largest-remainder apportionment of `total` rows across classes.
  auto apportion = [&](std::size_t total, const std::vector<std::size_t>& available) {
    std::vector<std::size_t> quota(members.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    std::size_t pool = 0;
    for (auto a : available) pool += a;
    for (std::size_t j = 0; j < members.size(); ++j) {
      const double exact = pool == 0 ? 0.0
                                     : static_cast<double>(total) * static_cast<double>(available[j]) /
                                           static_cast<double>(pool);
      quota[j] = std::min(available[j], static_cast<std::size_t>(std::floor(exact)));
      assigned += quota[j];
      remainders.emplace_back(exact - std::floor(exact), j);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    // total <= pool, so cycling through the classes always terminates.
    for (std::size_t i = 0; assigned < total; ++i) {
      const std::size_t j = remainders[i % remainders.size()].second;
      if (quota[j] < available[j]) {
        ++quota[j];
        ++assigned;
      }
    }
    return quota;
  };

  std::vector<std::size_t> available(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) available[j] = members[j].size();
  const auto train_quota = apportion(train_count, available);
  for (std::size_t j = 0; j < members.size(); ++j) available[j] -= train_quota[j];
  const auto test_quota = apportion(test_count, available);

  StratifiedSplit split;
  for (std::size_t j = 0; j < members.size(); ++j) {
    split.train.insert(split.train.end(), members[j].begin(),
                       members[j].begin() + static_cast<std::ptrdiff_t>(train_quota[j]));
    split.test.insert(split.test.end(), members[j].begin() + static_cast<std::ptrdiff_t>(train_quota[j]),
                      members[j].begin() + static_cast<std::ptrdiff_t>(train_quota[j] + test_quota[j]));
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace icrst
