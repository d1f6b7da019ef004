#include "ogs/voting.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ogs {

namespace {

// Flat accumulator in first-appearance order; per-label addition order is
// depth order, matching the map-based tally in vote_pixel bit for bit.
struct FlatTally {
  std::vector<TallyEntry> slots;

  void add(std::uint32_t label, float weight) {
    for (auto& slot : slots) {
      if (slot.label == label) {
        slot.weight += weight;
        return;
      }
    }
    slots.push_back({label, weight});
  }

  // Unlabeled mass is tallied (it still attenuates) but holds no candidacy.
  std::uint32_t winner() const {
    std::uint32_t best_label = kBackgroundLabel;
    float best_weight = -1.0f;
    for (const auto& slot : slots) {
      if (slot.label == kBackgroundLabel) continue;
      if (slot.weight > best_weight ||
          (slot.weight == best_weight && slot.label < best_label)) {
        best_weight = slot.weight;
        best_label = slot.label;
      }
    }
    return best_label;
  }
};

}  // namespace

VoteResult vote_pixel(std::span<const std::pair<std::uint32_t, float>> contributors) {
  VoteResult result;
  float transmittance = 1.0f;
  for (const auto& [label, alpha] : contributors) {
    const float weight = alpha * transmittance;
    result.tally[label] += weight;
    transmittance *= 1.0f - alpha;
  }
  float best_weight = -1.0f;
  for (const auto& [label, weight] : result.tally) {
    if (label == kBackgroundLabel) continue;
    if (weight > best_weight) {
      best_weight = weight;
      result.winner = label;
    }
  }
  return result;
}

LabelRender derive_label_render(const FrameRender& frame, int k, float coverage_threshold) {
  if (k <= 0) throw std::invalid_argument("derive_label_render: k must be positive");
  const int width = frame.contributors.width;
  const int height = frame.contributors.height;

  LabelRender out;
  out.label_map.labels = LabelGrid::Zero(height, width);
  out.topk.width = width;
  out.topk.height = height;
  out.topk.k = k;
  out.topk.offsets.reserve(static_cast<std::size_t>(width) * height + 1);
  out.topk.offsets.push_back(0);
  out.tally.width = width;
  out.tally.height = height;
  out.tally.offsets.reserve(static_cast<std::size_t>(width) * height + 1);
  out.tally.offsets.push_back(0);

  std::vector<std::uint8_t> seen;
  FlatTally tally;
  std::vector<std::uint32_t> order;

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto contributors = frame.contributors.at(x, y);

      tally.slots.clear();
      for (const PixelContributor& c : contributors) {
        tally.add(c.label, c.weight);
        if (c.gaussian_index >= seen.size()) seen.resize(c.gaussian_index + 1, 0);
        seen[c.gaussian_index] = 1;
      }

      const float coverage = 1.0f - frame.transmittance(y, x);
      out.label_map.labels(y, x) =
          coverage < coverage_threshold ? kBackgroundLabel : tally.winner();

      std::sort(tally.slots.begin(), tally.slots.end(),
                [](const TallyEntry& a, const TallyEntry& b) { return a.label < b.label; });
      out.tally.entries.insert(out.tally.entries.end(), tally.slots.begin(), tally.slots.end());
      out.tally.offsets.push_back(out.tally.entries.size());

      order.resize(contributors.size());
      for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
      const std::size_t keep = std::min<std::size_t>(k, order.size());
      std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                        [&](std::uint32_t a, std::uint32_t b) {
                          if (contributors[a].weight != contributors[b].weight) {
                            return contributors[a].weight > contributors[b].weight;
                          }
                          return contributors[a].gaussian_index < contributors[b].gaussian_index;
                        });
      for (std::size_t i = 0; i < keep; ++i) {
        const PixelContributor& c = contributors[order[i]];
        out.topk.entries.push_back({c.gaussian_index, c.label, c.weight});
      }
      out.topk.offsets.push_back(out.topk.entries.size());
    }
  }

  for (std::uint32_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.visible_gaussians.push_back(i);
  }
  return out;
}

LabelRenderResult render_label_map(const GaussianScene& scene, const Pose& pose,
                                   const CameraIntrinsics& intrinsics,
                                   const RenderSettings& settings, int k,
                                   float coverage_threshold) {
  RenderSettings with_contributors = settings;
  with_contributors.record_contributors = true;
  LabelRenderResult result;
  result.frame = rasterize(scene, pose, intrinsics, with_contributors);
  result.labels = derive_label_render(result.frame, k, coverage_threshold);
  return result;
}

RelabelResult relabel_via_topk(GaussianScene& scene, const TopKContributorMatrix& topk,
                               std::span<const TopkRelabelCommand> updates) {
  std::map<std::uint32_t, std::uint32_t> pending;  // gaussian -> target
  RelabelResult result;

  for (const TopkRelabelCommand& cmd : updates) {
    if (cmd.pixel.x < 0 || cmd.pixel.x >= topk.width || cmd.pixel.y < 0 ||
        cmd.pixel.y >= topk.height) {
      throw std::out_of_range("relabel_via_topk: pixel (" + std::to_string(cmd.pixel.x) + "," +
                              std::to_string(cmd.pixel.y) + ") out of bounds");
    }
    bool matched = false;
    for (const TopKEntry& entry : topk.at(cmd.pixel.x, cmd.pixel.y)) {
      if (entry.label != cmd.from) continue;
      matched = true;
      if (scene.gaussian(entry.gaussian_index).label == cmd.to) continue;
      pending.emplace(entry.gaussian_index, cmd.to);  // first command wins
    }
    if (!matched) ++result.unmatched_updates;
  }

  std::map<std::uint32_t, std::vector<std::size_t>> by_target;
  for (const auto& [index, target] : pending) by_target[target].push_back(index);
  for (const auto& [target, ids] : by_target) scene.relabel(ids, target);

  result.relabeled.reserve(pending.size());
  for (const auto& [index, target] : pending) result.relabeled.push_back(index);
  return result;
}

std::map<std::uint32_t, float> compute_completeness(const GaussianScene& scene,
                                                    std::span<const std::uint32_t> visible) {
  const auto census = scene.label_census();
  std::map<std::uint32_t, std::size_t> visible_counts;
  for (const std::uint32_t index : visible) {
    if (index >= scene.size()) {
      throw std::out_of_range("compute_completeness: gaussian index out of range");
    }
    ++visible_counts[scene.gaussian(index).label];
  }
  std::map<std::uint32_t, float> completeness;
  for (const auto& [label, total] : census) {
    const auto it = visible_counts.find(label);
    const std::size_t seen = it == visible_counts.end() ? 0 : it->second;
    completeness[label] = static_cast<float>(seen) / static_cast<float>(total);
  }
  return completeness;
}

ScalarGrid coverage_ratio_map(const LabelMap& rendered,
                              const std::map<std::uint32_t, float>& completeness) {
  ScalarGrid cov(rendered.height(), rendered.width());
  for (int y = 0; y < rendered.height(); ++y) {
    for (int x = 0; x < rendered.width(); ++x) {
      const std::uint32_t label = rendered.labels(y, x);
      if (label == kBackgroundLabel) {
        cov(y, x) = 1.0f;
        continue;
      }
      const auto it = completeness.find(label);
      if (it == completeness.end()) {
        throw std::runtime_error("coverage_ratio_map: no completeness entry for label " +
                                 std::to_string(label));
      }
      cov(y, x) = it->second;
    }
  }
  return cov;
}

}  // namespace ogs
