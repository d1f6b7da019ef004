#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ogs/scene.hpp"
#include "ogs/types.hpp"
#include "ogs/voting.hpp"

namespace ogs {

struct PruneReport {
  std::vector<std::uint32_t> counter_candidates;  // sorted, pre-removal indices
  std::vector<std::uint32_t> pruned;              // subset of candidates
  std::map<std::uint32_t, float> pruned_max_scale;
};

// Pixels carrying `label`, in row-major scan order.
std::vector<Pixel> mask_pixels(const LabelMap& map, std::uint32_t label);

// Set symmetric difference of two pixel sets in row-major scan order.
std::vector<Pixel> symmetric_difference_pixels(std::span<const Pixel> mask_s,
                                               std::span<const Pixel> mask_r);

// Gaussians recorded in topk at any pixel of `region` with the given label;
// sorted, unique. Does not mutate anything.
std::vector<std::uint32_t> collect_counter_candidates(const TopKContributorMatrix& topk,
                                                      std::span<const Pixel> region,
                                                      std::uint32_t rendered_label);

inline constexpr float kDefaultPruneScale = 0.10f;

// Removes candidate gaussians whose largest scale axis exceeds theta.
// Reported indices refer to the scene as it was before removal.
PruneReport prune_oversized(GaussianScene& scene, std::span<const std::uint32_t> candidates,
                            float theta = kDefaultPruneScale);

// Full counter-prune step for one matched mask pair: candidates are drawn
// from topk over the symmetric-difference region, filtered by label, then
// size-thresholded and removed.
PruneReport counter_prune(GaussianScene& scene, std::span<const Pixel> region,
                          std::uint32_t rendered_label, const TopKContributorMatrix& topk,
                          float theta = kDefaultPruneScale);

}  // namespace ogs
