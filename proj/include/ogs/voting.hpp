#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "ogs/scene.hpp"
#include "ogs/splat_render.hpp"
#include "ogs/types.hpp"

namespace ogs {

struct VoteResult {
  std::uint32_t winner = kBackgroundLabel;
  std::map<std::uint32_t, float> tally;
};

// contributors are depth-ascending (label, alpha) pairs; weights follow the
// front-to-back recurrence w_i = alpha_i * prod_{j<i}(1 - alpha_j). Label 0
// accumulates in the tally but never wins (unlabeled mass has no candidacy).
VoteResult vote_pixel(std::span<const std::pair<std::uint32_t, float>> contributors);

struct TopKEntry {
  std::uint32_t gaussian_index = 0;
  std::uint32_t label = 0;
  float weight = 0.0f;
};

// Per-pixel list of the K highest-weight contributors, weight-descending
// (ties by gaussian index ascending). CSR layout, row-major pixels.
struct TopKContributorMatrix {
  int width = 0;
  int height = 0;
  int k = 0;
  std::vector<std::size_t> offsets;  // width*height + 1
  std::vector<TopKEntry> entries;

  std::span<const TopKEntry> at(int x, int y) const {
    const std::size_t p = static_cast<std::size_t>(y) * width + x;
    return {entries.data() + offsets[p], offsets[p + 1] - offsets[p]};
  }
};

struct TallyEntry {
  std::uint32_t label = 0;
  float weight = 0.0f;
};

// Per-pixel cumulative weight per label, label-ascending. CSR layout.
struct LabelWeightTally {
  int width = 0;
  int height = 0;
  std::vector<std::size_t> offsets;
  std::vector<TallyEntry> entries;

  std::span<const TallyEntry> at(int x, int y) const {
    const std::size_t p = static_cast<std::size_t>(y) * width + x;
    return {entries.data() + offsets[p], offsets[p + 1] - offsets[p]};
  }
};

struct LabelRender {
  LabelMap label_map;
  TopKContributorMatrix topk;
  LabelWeightTally tally;
  std::vector<std::uint32_t> visible_gaussians;  // sorted, unique
};

inline constexpr int kDefaultTopK = 50;
inline constexpr float kDefaultCoverageThreshold = 0.5f;

// Elects a label per pixel from an already rasterized frame. Pixels whose
// coverage (1 - transmittance) falls below coverage_threshold render as
// background.
LabelRender derive_label_render(const FrameRender& frame, int k = kDefaultTopK,
                                float coverage_threshold = kDefaultCoverageThreshold);

struct LabelRenderResult {
  FrameRender frame;
  LabelRender labels;
};

LabelRenderResult render_label_map(const GaussianScene& scene, const Pose& pose,
                                   const CameraIntrinsics& intrinsics,
                                   const RenderSettings& settings = {},
                                   int k = kDefaultTopK,
                                   float coverage_threshold = kDefaultCoverageThreshold);

struct TopkRelabelCommand {
  Pixel pixel;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
};

struct RelabelResult {
  std::vector<std::uint32_t> relabeled;  // sorted, unique gaussian indices
  std::size_t unmatched_updates = 0;
};

// For each command, gaussians recorded in topk at that pixel with label
// `from` are relabeled to `to`. Commands are processed in order; the first
// target assigned to a gaussian wins. Gaussians already carrying the target
// are left alone and excluded from the result.
RelabelResult relabel_via_topk(GaussianScene& scene, const TopKContributorMatrix& topk,
                               std::span<const TopkRelabelCommand> updates);

// Fraction of each label's gaussians present in the visible set; labels with
// zero census count are omitted.
std::map<std::uint32_t, float> compute_completeness(const GaussianScene& scene,
                                                    std::span<const std::uint32_t> visible);

// Per-pixel lookup of completeness through the rendered map; background
// pixels read 1.0. Missing entries for a rendered label are an error.
ScalarGrid coverage_ratio_map(const LabelMap& rendered,
                              const std::map<std::uint32_t, float>& completeness);

}  // namespace ogs
