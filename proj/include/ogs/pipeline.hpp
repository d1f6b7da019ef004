#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ogs/camera.hpp"
#include "ogs/consensus.hpp"
#include "ogs/metrics.hpp"
#include "ogs/pruning.hpp"
#include "ogs/scene.hpp"
#include "ogs/splat_render.hpp"
#include "ogs/synthetic.hpp"
#include "ogs/types.hpp"
#include "ogs/voting.hpp"

namespace ogs {

struct FrameInput {
  RgbImage rgb;
  ScalarGrid depth;  // world units, 0 = invalid
  Pose pose;         // world-to-camera
  InputSegmentation segmentation;
  std::vector<Detection> detections;
};

// Assigns each input label the class of the detection whose bbox best
// overlaps the label's tight bbox (IoU > 0.5), else ("None", 0.0).
LabelClassTable associate_detections(const LabelMap& input_map,
                                     std::span<const Detection> detections);

struct DensifyParams {
  int stride = 4;                 // pixel grid step
  float depth_threshold = 0.05f;  // world units
  float opacity = 0.7f;
};

// Fills geometry gaps: on a stride grid, pixels with valid input depth and
// absent or disagreeing rendered depth are back-projected into isotropic
// splats labeled from the consistent map. Pixels whose geometry checks out but
// whose vote yields only unlabeled mass are re-seeded too when the consistent
// map names them, or the unlabeled splats would shadow the region for good.
// Returns the number added.
std::size_t densify_keyframe(GaussianScene& scene, const FrameInput& frame,
                             const FrameRender& rendered, const LabelMap& rendered_labels,
                             const LabelMap& consistent_map, const CameraIntrinsics& intrinsics,
                             const DensifyParams& params = {});

struct PipelineParams {
  ConsensusThresholds thresholds{};
  float delta = kDefaultPartDecay;
  float theta = kDefaultPruneScale;
  int top_k = kDefaultTopK;
  int keyframe_every = 5;
  std::uint32_t max_labels = kDefaultMaxLabels;
  float coverage_threshold = kDefaultCoverageThreshold;
  DensifyParams densify{};
  RenderSettings render{};
  bool input_confidence_update = true;
};

struct FrameReport {
  std::size_t relabeled = 0;
  std::size_t unmatched_commands = 0;
  std::size_t pruned = 0;
  std::size_t densified = 0;
  std::size_t new_labels = 0;
  std::size_t label_count = 0;  // registry size after the frame
  // Ground-truth-checked count of part groups that broke up a rendered
  // label even though both sides cover the same ground-truth object.
  std::size_t overwrite_events = 0;
  SegmentationScore consistent_vs_gt;  // valid when gt was supplied
  ConsensusOutcome outcome;
};

class MappingPipeline {
 public:
  MappingPipeline(const PipelineParams& params, const CameraIntrinsics& intrinsics)
      : params_(params), intrinsics_(intrinsics), scene_(params.max_labels) {}

  // One full per-frame step: render, confidence update, consensus, relabel,
  // decay, table merge, counter pruning, and (on keyframes) densification.
  // gt, when given, only fills the report's diagnostic fields.
  FrameReport process_frame(const FrameInput& frame, const LabelMap* gt = nullptr);

  const GaussianScene& scene() const { return scene_; }
  GaussianScene& scene() { return scene_; }
  const PipelineParams& params() const { return params_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  int frames_processed() const { return frame_; }

 private:
  PipelineParams params_;
  CameraIntrinsics intrinsics_;
  GaussianScene scene_;
  int frame_ = 0;
};

struct FinalEvaluation {
  float miou = 0.0f;  // mean over all trajectory poses
  float acc = 0.0f;
  std::size_t rendered_label_count = 0;  // distinct nonzero labels across views
};

FinalEvaluation evaluate_final_map(const GaussianScene& scene, std::span<const Pose> trajectory,
                                   std::span<const LabelMap> gt_maps,
                                   const CameraIntrinsics& intrinsics,
                                   const PipelineParams& params);

struct RunMetrics {
  std::vector<float> frame_miou;
  std::vector<float> frame_acc;
  std::vector<std::size_t> label_counts;
  std::vector<std::size_t> prune_counts;
  std::vector<std::size_t> densify_counts;
  std::size_t total_overwrites = 0;
  float final_miou = 0.0f;
  float final_acc = 0.0f;
  std::size_t final_label_count = 0;
};

// Plain-text, fully deterministic serialization (no timings).
void write_metrics(const RunMetrics& metrics, const std::string& path);

struct RunConfig {
  SyntheticSceneSpec scene_spec{};
  PerturbationSpec perturbation{};
  PipelineParams params{};
  std::uint32_t seed = 0;
  std::string data_dir;    // when set, frames are read from files instead
  std::string output_dir;  // when set, scene/metrics/table files are written
};

RunMetrics run_pipeline(const RunConfig& config);

// Writes a complete recorded dataset (consumable via RunConfig.data_dir).
void write_dataset(const SyntheticDataset& dataset, const PerturbationSpec& perturbation,
                   const CameraIntrinsics& intrinsics, const std::string& dir);

struct BenchReport {
  double rgb_ms = 0.0;
  double label_ms = 0.0;
  double ratio = 0.0;
};

BenchReport bench_render(const GaussianScene& scene, const Pose& pose,
                         const CameraIntrinsics& intrinsics, const RenderSettings& settings = {},
                         int repeats = 5);

}  // namespace ogs
