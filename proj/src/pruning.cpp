#include "ogs/pruning.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ogs {

namespace {

bool scan_order_less(const Pixel& a, const Pixel& b) {
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

}  // namespace

std::vector<Pixel> mask_pixels(const LabelMap& map, std::uint32_t label) {
  std::vector<Pixel> pixels;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (map.labels(y, x) == label) pixels.push_back({x, y});
    }
  }
  return pixels;
}

std::vector<Pixel> symmetric_difference_pixels(std::span<const Pixel> mask_s,
                                               std::span<const Pixel> mask_r) {
  std::vector<Pixel> a(mask_s.begin(), mask_s.end());
  std::vector<Pixel> b(mask_r.begin(), mask_r.end());
  std::sort(a.begin(), a.end(), scan_order_less);
  std::sort(b.begin(), b.end(), scan_order_less);
  std::vector<Pixel> out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out),
                                scan_order_less);
  return out;
}

std::vector<std::uint32_t> collect_counter_candidates(const TopKContributorMatrix& topk,
                                                      std::span<const Pixel> region,
                                                      std::uint32_t rendered_label) {
  std::vector<std::uint32_t> candidates;
  for (const Pixel& p : region) {
    if (p.x < 0 || p.x >= topk.width || p.y < 0 || p.y >= topk.height) {
      throw std::out_of_range("collect_counter_candidates: pixel (" + std::to_string(p.x) + "," +
                              std::to_string(p.y) + ") out of bounds");
    }
    for (const TopKEntry& entry : topk.at(p.x, p.y)) {
      if (entry.label == rendered_label) candidates.push_back(entry.gaussian_index);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  return candidates;
}

PruneReport prune_oversized(GaussianScene& scene, std::span<const std::uint32_t> candidates,
                            float theta) {
  if (!(theta > 0.0f)) throw std::invalid_argument("prune_oversized: theta must be positive");
  PruneReport report;
  report.counter_candidates.assign(candidates.begin(), candidates.end());
  std::sort(report.counter_candidates.begin(), report.counter_candidates.end());
  report.counter_candidates.erase(
      std::unique(report.counter_candidates.begin(), report.counter_candidates.end()),
      report.counter_candidates.end());

  std::vector<std::size_t> to_remove;
  for (const std::uint32_t index : report.counter_candidates) {
    if (index >= scene.size()) {
      throw std::out_of_range("prune_oversized: gaussian index " + std::to_string(index) +
                              " out of range");
    }
    const float max_scale = scene.gaussian(index).scale.maxCoeff();
    if (max_scale > theta) {
      report.pruned.push_back(index);
      report.pruned_max_scale[index] = max_scale;
      to_remove.push_back(index);
    }
  }
  scene.remove_gaussians(to_remove);
  return report;
}

PruneReport counter_prune(GaussianScene& scene, std::span<const Pixel> region,
                          std::uint32_t rendered_label, const TopKContributorMatrix& topk,
                          float theta) {
  const auto candidates = collect_counter_candidates(topk, region, rendered_label);
  return prune_oversized(scene, candidates, theta);
}

}  // namespace ogs
