#pragma once

#include <cstdint>
#include <vector>

#include "ogs/camera.hpp"
#include "ogs/consensus.hpp"
#include "ogs/scene.hpp"
#include "ogs/types.hpp"

namespace ogs {

/// Desk-scale test world: primitives (boxes, spheres, thin panels) arranged
/// on a ring, observed from an orbit at a fixed distance from the ring
/// center.
struct SyntheticSceneSpec {
  int object_count = 8;
  int gaussians_per_object = 80;  // >= 8
  float object_size = 0.35f;      // characteristic half-extent, world units
  float ring_radius = 1.2f;
  Eigen::Vector3f center = {0.0f, 0.0f, 0.3f};
  float orbit_radius = 3.2f;
  float orbit_elevation = 0.5f;  // radians above the ring plane
  // Azimuth swept by the whole trajectory. A quarter circle over the default
  // 40 frames moves like a slow handheld pan; a full 2*pi revisits nothing
  // and outruns keyframe densification.
  float orbit_span = 1.5707963f;
  int frames = 40;
  CameraIntrinsics intrinsics = {240.0f, 240.0f, 160.0f, 120.0f, 320, 240};
  float opacity = 0.85f;
};

struct SyntheticDataset {
  GaussianScene gt_scene;
  std::vector<Pose> trajectory;  // world-to-camera
  std::vector<LabelMap> gt_label_maps;
  std::vector<RgbImage> rgb;
  std::vector<ScalarGrid> depth;  // synthetic sensor depth, 0 = invalid
  LabelClassTable classes;        // ground-truth label -> class
  std::vector<std::vector<Detection>> detections;
};

// Deterministic for a fixed (spec, seed). Ground-truth label maps, color,
// and depth come from rendering the ground-truth scene itself, so the
// pipeline is always compared against maps with the same splat footprint.
SyntheticDataset generate_synthetic(const SyntheticSceneSpec& spec, std::uint32_t seed);

/// Reproduces segmentation failure modes: per-frame label permutation,
/// over-segmentation into parts, adjacent-object merges, confidence noise.
struct PerturbationSpec {
  bool permute_labels = true;
  float oversegment_prob = 0.0f;
  int split_parts_min = 2;
  int split_parts_max = 4;
  // Keep each object's split line fixed across frames (the same physical
  // over-segmentation recurs) instead of redrawing it every frame.
  bool stable_split = true;
  float merge_prob = 0.0f;
  float confidence_base = 0.9f;
  float confidence_noise = 0.0f;
  std::uint32_t seed = 0;
};

// Deterministic per (spec.seed, frame_index). The class table is left as
// "None" entries; detection association fills it in the pipeline.
InputSegmentation perturb_segmentation(const LabelMap& gt_map, const PerturbationSpec& spec,
                                       std::uint32_t frame_index);

}  // namespace ogs
