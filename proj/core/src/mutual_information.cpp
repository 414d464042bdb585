#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "icrst/analysis.hpp"
#include "icrst/error.hpp"

namespace icrst {
namespace {

std::size_t bin_of(double v, std::size_t bins) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return bins - 1;
  return std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
}

}  // namespace

double histogram_mutual_information(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (a.size() != b.size()) throw ShapeError("histogram MI: images differ in size");
  if (a.empty()) throw EmptyInputError("histogram MI: empty images");
  if (bins < 2) throw ConfigError("histogram MI needs at least 2 bins");
  std::vector<double> joint(bins * bins, 0.0), pa(bins, 0.0), pb(bins, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t ia = bin_of(a[i], bins), ib = bin_of(b[i], bins);
    joint[ia * bins + ib] += 1.0;
    pa[ia] += 1.0;
    pb[ib] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  // sum p(a,b) log(p(a,b) / (p(a) p(b))) with counts: (c/n) log(c n / (ca cb))
  double mi = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    if (pa[i] == 0.0) continue;
    for (std::size_t j = 0; j < bins; ++j) {
      const double c = joint[i * bins + j];
      if (c == 0.0) continue;
      mi += c * std::log(c * n / (pa[i] * pb[j]));
    }
  }
  return std::max(0.0, mi / n);
}

double histogram_entropy(std::span<const double> a, std::size_t bins) {
  if (a.empty()) throw EmptyInputError("histogram entropy: empty image");
  if (bins < 2) throw ConfigError("histogram entropy needs at least 2 bins");
  std::vector<double> counts(bins, 0.0);
  for (double v : a) counts[bin_of(v, bins)] += 1.0;
  const double n = static_cast<double>(a.size());
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  return h;
}

std::string MutualInformationEstimate::to_json() const {
  return nlohmann::ordered_json{{"mi_mean", mean},
                                {"mi_std_error", std_error},
                                {"samples", samples},
                                {"neighbors", neighbors}}
      .dump(2);
}

MutualInformationEstimate estimate_mutual_information(const Matrix& images, const Matrix& latents,
                                                      const MIConfig& cfg) {
  if (images.rows() != latents.rows()) {
    throw ShapeError("MI: " + std::to_string(images.rows()) + " images but " +
                     std::to_string(latents.rows()) + " latent rows");
  }
  std::vector<std::string> problems;
  if (cfg.samples < 1) problems.emplace_back("sample count must be >= 1");
  if (cfg.samples > images.rows()) problems.emplace_back("sample count exceeds dataset size");
  if (cfg.neighbors < 1) problems.emplace_back("neighbor count must be >= 1");
  if (cfg.neighbors >= images.rows()) problems.emplace_back("neighbor count must be below dataset size");
  if (cfg.bins < 2) problems.emplace_back("bins must be >= 2");
  if (cfg.channels < 1 || images.cols() % cfg.channels != 0)
    problems.emplace_back("image width is not divisible by the channel count");
  if (!problems.empty()) {
    std::string msg = "invalid MI config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }

  SeededRng rng(cfg.seed);
  auto order = rng.permutation(images.rows());
  order.resize(cfg.samples);

  const std::size_t plane = images.cols() / cfg.channels;
  std::vector<double> per_anchor;
  per_anchor.reserve(cfg.samples);
  std::vector<double> dist(latents.rows());
  for (std::size_t anchor : order) {
    const auto za = latents.row(anchor);
    for (std::size_t r = 0; r < latents.rows(); ++r) dist[r] = std::sqrt(squared_distance(za, latents.row(r)));
    dist[anchor] = std::numeric_limits<double>::infinity();
    const auto nn = top_k_smallest(dist, cfg.neighbors);
    double acc = 0.0;
    for (std::size_t nb : nn) {
      const auto a = images.row(anchor);
      const auto b = images.row(nb);
      for (std::size_t ch = 0; ch < cfg.channels; ++ch) {
        acc += histogram_mutual_information(a.subspan(ch * plane, plane), b.subspan(ch * plane, plane), cfg.bins);
      }
    }
    per_anchor.push_back(acc / static_cast<double>(cfg.neighbors * cfg.channels));
  }

  MutualInformationEstimate est;
  est.samples = cfg.samples;
  est.neighbors = cfg.neighbors;
  for (double v : per_anchor) est.mean += v;
  est.mean /= static_cast<double>(per_anchor.size());
  if (per_anchor.size() > 1) {
    double ss = 0.0;
    for (double v : per_anchor) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(per_anchor.size() - 1)) /
                    std::sqrt(static_cast<double>(per_anchor.size()));
  }
  return est;
}

MutualInformationEstimate estimate_mutual_information(const Network& net, const Matrix& inputs,
                                                      const Matrix& images, const MIConfig& cfg) {
  return estimate_mutual_information(images, encode(net, inputs), cfg);
}

}  // namespace icrst
