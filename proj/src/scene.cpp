#include "ogs/scene.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace ogs {

const SegmentRecord* GaussianScene::find_record(std::uint32_t label) const {
  auto it = registry_.find(label);
  return it == registry_.end() ? nullptr : &it->second;
}

void GaussianScene::bump_next_label(std::uint32_t seen) {
  if (seen >= next_label_) next_label_ = seen + 1;
}

void GaussianScene::register_label(std::uint32_t label, float confidence) {
  if (label == kBackgroundLabel) return;
  auto [it, inserted] = registry_.try_emplace(label);
  if (inserted) {
    if (registry_.size() > max_labels_) {
      registry_.erase(it);
      throw std::runtime_error("label budget exceeded (max " + std::to_string(max_labels_) + ")");
    }
    it->second.confidence = confidence;
    it->second.decay_base = confidence;
  }
  bump_next_label(label);
}

std::uint32_t GaussianScene::allocate_label(float confidence) {
  const std::uint32_t label = next_label_;
  register_label(label, confidence);
  return label;
}

void GaussianScene::set_confidence(std::uint32_t label, float confidence) {
  auto it = registry_.find(label);
  if (it == registry_.end()) throw std::out_of_range("set_confidence: unknown label");
  it->second.confidence = std::clamp(confidence, 0.0f, 1.0f);
  it->second.decay_base = it->second.confidence;
  it->second.part_decay_applied = 0;
}

bool GaussianScene::decay_label(std::uint32_t label, float delta) {
  auto it = registry_.find(label);
  if (it == registry_.end()) return false;
  // Computed from the base so n consecutive decays land on exactly
  // max(0, base - n * delta); iterated subtraction drifts in float.
  it->second.part_decay_applied += 1;
  it->second.confidence =
      std::max(0.0f, it->second.decay_base -
                         static_cast<float>(it->second.part_decay_applied) * delta);
  return true;
}

void GaussianScene::add_gaussians(std::span<const LabeledGaussian> batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (auto why = invariant_violation(batch[i])) {
      throw std::invalid_argument("add_gaussians: batch element " + std::to_string(i) + ": " +
                                  *why);
    }
  }
  // Pre-register new labels so a budget overflow rejects the batch before
  // any gaussian is appended.
  std::set<std::uint32_t> new_labels;
  for (const auto& g : batch) {
    if (g.label != kBackgroundLabel && !registry_.contains(g.label)) new_labels.insert(g.label);
  }
  if (!new_labels.empty() && registry_.size() + new_labels.size() > max_labels_) {
    throw std::runtime_error("add_gaussians: label budget exceeded");
  }
  gaussians_.insert(gaussians_.end(), batch.begin(), batch.end());
  for (const auto& g : batch) {
    if (g.label == kBackgroundLabel) continue;
    register_label(g.label, 0.0f);
    registry_[g.label].gaussian_count += 1;
  }
}

std::size_t GaussianScene::relabel(std::span<const std::size_t> ids, std::uint32_t target) {
  for (std::size_t id : ids) {
    if (id >= gaussians_.size()) {
      throw std::out_of_range("relabel: gaussian index " + std::to_string(id) + " out of range");
    }
  }
  register_label(target, 0.0f);
  std::size_t moved = 0;
  for (std::size_t id : ids) {
    LabeledGaussian& g = gaussians_[id];
    if (g.label == target) continue;
    if (g.label != kBackgroundLabel) {
      auto it = registry_.find(g.label);
      if (it != registry_.end() && it->second.gaussian_count > 0) it->second.gaussian_count -= 1;
    }
    g.label = target;
    if (target != kBackgroundLabel) registry_[target].gaussian_count += 1;
    ++moved;
  }
  return moved;
}

bool GaussianScene::remove_label(std::uint32_t target) {
  if (target == kBackgroundLabel) {
    throw std::invalid_argument("remove_label: background label is not removable");
  }
  auto it = registry_.find(target);
  if (it == registry_.end()) return false;
  std::erase_if(gaussians_, [target](const LabeledGaussian& g) { return g.label == target; });
  registry_.erase(it);
  table_.entries.erase(target);
  return true;
}

std::size_t GaussianScene::merge_label(std::uint32_t from, std::uint32_t to) {
  if (from == kBackgroundLabel || to == kBackgroundLabel) {
    throw std::invalid_argument("merge_label: background label is not mergeable");
  }
  const auto to_it = registry_.find(to);
  if (to_it == registry_.end()) {
    throw std::out_of_range("merge_label: unknown target label " + std::to_string(to));
  }
  const auto from_it = registry_.find(from);
  if (from_it == registry_.end()) return 0;
  if (from == to) return 0;
  std::size_t moved = 0;
  for (LabeledGaussian& g : gaussians_) {
    if (g.label != from) continue;
    g.label = to;
    ++moved;
  }
  to_it->second.gaussian_count += from_it->second.gaussian_count;
  registry_.erase(from_it);
  table_.entries.erase(from);
  return moved;
}

std::size_t GaussianScene::remove_gaussians(std::span<const std::size_t> ids) {
  if (ids.empty()) return 0;
  std::vector<std::size_t> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.back() >= gaussians_.size()) {
    throw std::out_of_range("remove_gaussians: index " + std::to_string(sorted.back()) +
                            " out of range");
  }
  for (std::size_t id : sorted) {
    const std::uint32_t label = gaussians_[id].label;
    if (label == kBackgroundLabel) continue;
    auto it = registry_.find(label);
    if (it != registry_.end() && it->second.gaussian_count > 0) it->second.gaussian_count -= 1;
  }
  // Stable compaction keeping everything not listed.
  std::vector<LabeledGaussian> kept;
  kept.reserve(gaussians_.size() - sorted.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < gaussians_.size(); ++i) {
    if (cursor < sorted.size() && sorted[cursor] == i) {
      ++cursor;
      continue;
    }
    kept.push_back(gaussians_[i]);
  }
  gaussians_ = std::move(kept);
  return sorted.size();
}

std::map<std::uint32_t, std::size_t> GaussianScene::label_census() const {
  std::map<std::uint32_t, std::size_t> census;
  for (const auto& g : gaussians_) census[g.label] += 1;
  return census;
}

}  // namespace ogs
