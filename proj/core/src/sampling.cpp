#include "icrst/sampling.hpp"

#include <vector>

#include "icrst/error.hpp"

namespace icrst {

TrainingMode TrainingMode::icrst(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("ICRST mixing probability must lie in [0,1]");
  return TrainingMode(Kind::Icrst, p);
}

std::string TrainingMode::name() const {
  switch (kind_) {
    case Kind::Standard: return "standard";
    case Kind::Icrst: return "icrst";
    case Kind::Trst: return "trst";
  }
  return "unknown";
}

ClassIndex::ClassIndex(const LabelVector& labels) : members_(labels.class_count()) {
  for (std::size_t i = 0; i < labels.size(); ++i) members_[labels[i]].push_back(i);
}

ClassIndex::ClassIndex(std::vector<std::vector<std::size_t>> members) : members_(std::move(members)) {
  std::vector<bool> seen;
  for (const auto& list : members_) {
    for (auto row : list) {
      if (row >= seen.size()) seen.resize(row + 1, false);
      if (seen[row]) throw IntegrityError("class index lists overlap at row " + std::to_string(row));
      seen[row] = true;
    }
  }
}

bool draw_step_flag(double p, SeededRng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("step flag probability must lie in [0,1]");
  return rng.uniform01() < p;
}

std::vector<std::size_t> select_targets(std::span<const std::size_t> batch_rows, const TrainingMode& mode,
                                        const TargetSelection& ctx, SeededRng& rng) {
  for (auto row : batch_rows) {
    if (row >= ctx.dataset_size) {
      throw BoundsError("batch row " + std::to_string(row) + " outside dataset of " +
                        std::to_string(ctx.dataset_size));
    }
  }
  std::vector<std::size_t> targets(batch_rows.begin(), batch_rows.end());
  switch (mode.kind()) {
    case TrainingMode::Kind::Standard:
      return targets;
    case TrainingMode::Kind::Trst:
      for (auto& t : targets) t = rng.uniform_index(ctx.dataset_size);
      return targets;
    case TrainingMode::Kind::Icrst:
      break;
  }
  if (ctx.labels == nullptr || ctx.class_index == nullptr) {
    throw ConfigError("ICRST target selection needs labels and a class index");
  }
  auto in_class_draw = [&](std::size_t row) {
    const std::size_t cls = (*ctx.labels)[row];
    if (cls >= ctx.class_index->class_count() || ctx.class_index->members(cls).empty()) {
      throw IntegrityError("row " + std::to_string(row) + " has label " + std::to_string(cls) +
                           " with no class members");
    }
    const auto members = ctx.class_index->members(cls);
    return members[rng.uniform_index(members.size())];
  };
  if (ctx.per_sample_flag) {
    for (auto& t : targets)
      if (draw_step_flag(mode.p(), rng)) t = in_class_draw(t);
  } else if (draw_step_flag(mode.p(), rng)) {
    for (auto& t : targets) t = in_class_draw(t);
  }
  return targets;
}

ClassStatistics class_statistics(const Matrix& data, const LabelVector& labels) {
  if (labels.size() != data.rows()) {
    throw ShapeError("class_statistics: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(data.rows()) + " rows");
  }
  const ClassIndex index(labels);
  ClassStatistics stats;
  for (std::size_t j = 0; j < index.class_count(); ++j) {
    const auto rows = index.members(j);
    if (rows.empty()) throw EmptyInputError("class " + std::to_string(j) + " has no rows");
    const Matrix subset = data.gather_rows(rows);
    stats.means.push_back(column_mean(subset));
    stats.variances.push_back(column_variance(subset));
    stats.counts.push_back(rows.size());
  }
  return stats;
}

}  // namespace icrst
