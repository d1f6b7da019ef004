#include "ogs/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "ogs/io.hpp"

namespace ogs {

namespace {

std::string frame_file(const std::string& dir, const char* stem, int index, const char* ext) {
  std::ostringstream os;
  os << dir << "/" << stem << "_" << std::setw(4) << std::setfill('0') << index << ext;
  return os.str();
}

std::uint32_t majority_nonzero(const std::map<std::uint32_t, std::size_t>& counts) {
  std::uint32_t best = kBackgroundLabel;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best_count = count;
      best = label;
    }
  }
  return best;
}

std::string format_float_text(float v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

}  // namespace

LabelClassTable associate_detections(const LabelMap& input_map,
                                     std::span<const Detection> detections) {
  LabelClassTable table;
  for (const std::uint32_t label : input_map.distinct_labels()) {
    int x0 = input_map.width(), y0 = input_map.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < input_map.height(); ++y) {
      for (int x = 0; x < input_map.width(); ++x) {
        if (input_map.labels(y, x) != label) continue;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
    const float area_label = static_cast<float>((x1 - x0 + 1) * (y1 - y0 + 1));
    ClassEntry best;  // defaults to ("None", 0.0)
    float best_iou = 0.5f;
    for (const Detection& d : detections) {
      const float iw = std::min(d.x1, static_cast<float>(x1)) -
                       std::max(d.x0, static_cast<float>(x0)) + 1.0f;
      const float ih = std::min(d.y1, static_cast<float>(y1)) -
                       std::max(d.y0, static_cast<float>(y0)) + 1.0f;
      if (iw <= 0.0f || ih <= 0.0f) continue;
      const float inter = iw * ih;
      const float area_det = (d.x1 - d.x0 + 1.0f) * (d.y1 - d.y0 + 1.0f);
      const float iou = inter / (area_label + area_det - inter);
      if (iou > best_iou) {
        best_iou = iou;
        best = {d.class_name, d.score};
      }
    }
    table.entries[label] = best;
  }
  return table;
}

std::size_t densify_keyframe(GaussianScene& scene, const FrameInput& frame,
                             const FrameRender& rendered, const LabelMap& rendered_labels,
                             const LabelMap& consistent_map, const CameraIntrinsics& intrinsics,
                             const DensifyParams& params) {
  if (params.stride < 1) throw std::invalid_argument("densify_keyframe: stride must be >= 1");
  const Pose cam_to_world = frame.pose.inverse();
  std::vector<LabeledGaussian> batch;
  for (int y = params.stride / 2; y < intrinsics.height; y += params.stride) {
    for (int x = params.stride / 2; x < intrinsics.width; x += params.stride) {
      const float d = frame.depth(y, x);
      if (d <= 0.0f) continue;
      // Compare front-surface estimates on both sides. Composited depth is a
      // blend over every surface the ray grazes, so at occlusion edges it
      // lands between objects and re-triggers densification every keyframe.
      const float coverage = 1.0f - rendered.transmittance(y, x);
      if (coverage >= 0.5f) {
        float acc = 0.0f;
        float median = 0.0f;
        for (const PixelContributor& c : rendered.contributors.at(x, y)) {
          acc += c.weight;
          median = c.depth;
          if (acc >= 0.5f * coverage) break;
        }
        if (std::abs(median - d) <= params.depth_threshold &&
            !(rendered_labels.labels(y, x) == kBackgroundLabel &&
              consistent_map.labels(y, x) != kBackgroundLabel)) {
          continue;
        }
      }

      const Eigen::Vector3f cam((static_cast<float>(x) + 0.5f - intrinsics.cx) / intrinsics.fx * d,
                                (static_cast<float>(y) + 0.5f - intrinsics.cy) / intrinsics.fy * d,
                                d);
      LabeledGaussian g;
      g.position = cam_to_world.apply(cam);
      g.scale = Eigen::Vector3f::Constant(static_cast<float>(params.stride) * d / intrinsics.fx *
                                          0.5f);
      g.opacity = params.opacity;
      g.color = frame.rgb.at(x, y).cwiseMax(0.0f).cwiseMin(1.0f);
      g.label = consistent_map.labels(y, x);
      batch.push_back(g);
    }
  }
  scene.add_gaussians(batch);
  return batch.size();
}

FrameReport MappingPipeline::process_frame(const FrameInput& frame, const LabelMap* gt) {
  FrameReport report;
  InputSegmentation input = frame.segmentation;
  if (!frame.detections.empty()) {
    input.table = associate_detections(input.label_map, frame.detections);
  }

  LabelRenderResult view = render_label_map(scene_, frame.pose, intrinsics_, params_.render,
                                            params_.top_k, params_.coverage_threshold);

  if (params_.input_confidence_update) {
    const auto completeness = compute_completeness(scene_, view.labels.visible_gaussians);
    const ScalarGrid cov = coverage_ratio_map(view.labels.label_map, completeness);
    input = update_input_confidence(input, cov);
  }

  const OverlapStats stats = overlap_stats(input.label_map, view.labels.label_map);
  const MatchClassification classification = classify_matches(stats, params_.thresholds);
  ConsensusOutcome outcome =
      resolve_consensus(input, view.labels.label_map, stats, classification, scene_);

  const RelabelResult relabeling =
      relabel_via_topk(scene_, view.labels.topk, outcome.relabel_commands);
  report.relabeled = relabeling.relabeled.size() + outcome.merged_gaussians;
  report.unmatched_commands = relabeling.unmatched_updates;

  apply_part_decay(scene_, outcome.decayed_scene_labels, params_.delta);
  input.confidences =
      apply_part_decay(std::move(input.confidences), outcome.decayed_input_labels, params_.delta);

  scene_.global_table() = merge_tables(scene_.global_table(), input.table, outcome.mapping);

  std::vector<std::uint32_t> prune_candidates;
  for (const auto& [ls, entry] : classification.by_input_label) {
    if (entry.kind != MatchKind::FullMatch) continue;
    const auto mask_s = mask_pixels(input.label_map, ls);
    const auto mask_r = mask_pixels(view.labels.label_map, entry.rendered_label);
    const auto region = symmetric_difference_pixels(mask_s, mask_r);
    const auto candidates =
        collect_counter_candidates(view.labels.topk, region, entry.rendered_label);
    prune_candidates.insert(prune_candidates.end(), candidates.begin(), candidates.end());
  }
  const PruneReport prune = prune_oversized(scene_, prune_candidates, params_.theta);
  report.pruned = prune.pruned.size();

  if (params_.keyframe_every > 0 && frame_ % params_.keyframe_every == 0) {
    report.densified = densify_keyframe(scene_, frame, view.frame, view.labels.label_map,
                                        outcome.consistent_map, intrinsics_, params_.densify);
  }

  if (gt != nullptr) {
    report.consistent_vs_gt = compute_miou_acc(outcome.consistent_map, *gt);
    for (const auto& [lr, parts] : outcome.part_overrides) {
      std::map<std::uint32_t, std::size_t> rendered_counts, part_counts;
      const std::set<std::uint32_t> part_set(parts.begin(), parts.end());
      for (int y = 0; y < gt->height(); ++y) {
        for (int x = 0; x < gt->width(); ++x) {
          const std::uint32_t g = gt->labels(y, x);
          if (g == kBackgroundLabel) continue;
          if (view.labels.label_map.labels(y, x) == lr) ++rendered_counts[g];
          if (part_set.count(input.label_map.labels(y, x))) ++part_counts[g];
        }
      }
      const std::uint32_t rendered_object = majority_nonzero(rendered_counts);
      const std::uint32_t parts_object = majority_nonzero(part_counts);
      if (rendered_object != kBackgroundLabel && rendered_object == parts_object) {
        ++report.overwrite_events;
      }
    }
  }

  report.new_labels = outcome.new_labels.size();
  report.label_count = scene_.label_registry().size();
  report.outcome = std::move(outcome);
  ++frame_;
  return report;
}

FinalEvaluation evaluate_final_map(const GaussianScene& scene, std::span<const Pose> trajectory,
                                   std::span<const LabelMap> gt_maps,
                                   const CameraIntrinsics& intrinsics,
                                   const PipelineParams& params) {
  if (trajectory.size() != gt_maps.size()) {
    throw std::invalid_argument("evaluate_final_map: trajectory/gt size mismatch");
  }
  FinalEvaluation out;
  double miou_sum = 0.0, acc_sum = 0.0;
  std::set<std::uint32_t> labels_seen;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const LabelRenderResult view = render_label_map(scene, trajectory[i], intrinsics,
                                                    params.render, params.top_k,
                                                    params.coverage_threshold);
    const SegmentationScore score = compute_miou_acc(view.labels.label_map, gt_maps[i]);
    miou_sum += score.miou;
    acc_sum += score.acc;
    for (const std::uint32_t l : view.labels.label_map.distinct_labels()) labels_seen.insert(l);
  }
  const double n = static_cast<double>(trajectory.size());
  out.miou = static_cast<float>(miou_sum / n);
  out.acc = static_cast<float>(acc_sum / n);
  out.rendered_label_count = labels_seen.size();
  return out;
}

void write_metrics(const RunMetrics& metrics, const std::string& path) {
  std::ostringstream os;
  os << "final_miou " << format_float_text(metrics.final_miou) << "\n";
  os << "final_acc " << format_float_text(metrics.final_acc) << "\n";
  os << "final_label_count " << metrics.final_label_count << "\n";
  os << "total_overwrites " << metrics.total_overwrites << "\n";
  os << "frames " << metrics.frame_miou.size() << "\n";
  for (std::size_t i = 0; i < metrics.frame_miou.size(); ++i) {
    os << "frame " << i << " miou " << format_float_text(metrics.frame_miou[i]) << " acc "
       << format_float_text(metrics.frame_acc[i]) << " labels " << metrics.label_counts[i]
       << " pruned " << metrics.prune_counts[i] << " densified " << metrics.densify_counts[i]
       << "\n";
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error(path + ": cannot open for writing");
  file << os.str();
  if (!file) throw std::runtime_error(path + ": write failed");
}

void write_dataset(const SyntheticDataset& dataset, const PerturbationSpec& perturbation,
                   const CameraIntrinsics& intrinsics, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_scene(dataset.gt_scene, dir + "/scene_gt.ogs1");
  write_trajectory(dataset.trajectory, dir + "/trajectory.txt");
  {
    std::ofstream os(dir + "/intrinsics.txt");
    if (!os) throw std::runtime_error(dir + "/intrinsics.txt: cannot open for writing");
    os << format_float_text(intrinsics.fx) << " " << format_float_text(intrinsics.fy) << " "
       << format_float_text(intrinsics.cx) << " " << format_float_text(intrinsics.cy) << " "
       << intrinsics.width << " " << intrinsics.height << "\n";
  }
  write_class_table(dataset.classes, dir + "/classes_gt.txt");
  for (std::size_t i = 0; i < dataset.trajectory.size(); ++i) {
    const int index = static_cast<int>(i);
    write_ppm(dataset.rgb[i], frame_file(dir, "rgb", index, ".ppm"));
    write_depth_map(dataset.depth[i], frame_file(dir, "depth", index, ".ogdm"));
    write_label_map(dataset.gt_label_maps[i], frame_file(dir, "gt", index, ".oglm"));
    write_detections(dataset.detections[i], frame_file(dir, "det", index, ".txt"));

    const InputSegmentation input =
        perturb_segmentation(dataset.gt_label_maps[i], perturbation, static_cast<std::uint32_t>(i));
    write_label_map(input.label_map, frame_file(dir, "labels", index, ".oglm"));
    ScalarGrid conf = ScalarGrid::Zero(input.label_map.height(), input.label_map.width());
    for (int y = 0; y < input.label_map.height(); ++y) {
      for (int x = 0; x < input.label_map.width(); ++x) {
        const std::uint32_t l = input.label_map.labels(y, x);
        if (l != kBackgroundLabel) conf(y, x) = input.confidences.at(l);
      }
    }
    write_confidence_map(conf, frame_file(dir, "conf", index, ".ogcm"));
  }
}

namespace {

CameraIntrinsics read_intrinsics_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open for reading");
  CameraIntrinsics intr;
  if (!(is >> intr.fx >> intr.fy >> intr.cx >> intr.cy >> intr.width >> intr.height)) {
    throw std::runtime_error(path + ": bad intrinsics file");
  }
  return intr;
}

InputSegmentation read_input_segmentation(const std::string& dir, int index) {
  InputSegmentation input;
  input.label_map = read_label_map(frame_file(dir, "labels", index, ".oglm"));
  const ScalarGrid conf = read_confidence_map(frame_file(dir, "conf", index, ".ogcm"));
  if (conf.rows() != input.label_map.labels.rows() ||
      conf.cols() != input.label_map.labels.cols()) {
    throw std::runtime_error("recorded frame " + std::to_string(index) +
                             ": confidence/label size mismatch");
  }
  std::map<std::uint32_t, double> sums;
  std::map<std::uint32_t, std::size_t> counts;
  for (int y = 0; y < input.label_map.height(); ++y) {
    for (int x = 0; x < input.label_map.width(); ++x) {
      const std::uint32_t l = input.label_map.labels(y, x);
      if (l == kBackgroundLabel) continue;
      sums[l] += conf(y, x);
      ++counts[l];
    }
  }
  for (const auto& [l, sum] : sums) {
    input.confidences[l] = static_cast<float>(sum / static_cast<double>(counts[l]));
    input.table.entries[l] = ClassEntry{};
  }
  return input;
}

}  // namespace

RunMetrics run_pipeline(const RunConfig& config) {
  RunMetrics metrics;
  std::vector<Pose> trajectory;
  std::vector<LabelMap> gt_maps;
  CameraIntrinsics intrinsics;

  const bool recorded = !config.data_dir.empty();
  SyntheticDataset dataset;
  if (recorded) {
    intrinsics = read_intrinsics_file(config.data_dir + "/intrinsics.txt");
    trajectory = read_trajectory(config.data_dir + "/trajectory.txt");
    if (trajectory.empty()) {
      throw std::runtime_error(config.data_dir + ": empty trajectory");
    }
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
      const std::string gt_path = frame_file(config.data_dir, "gt", static_cast<int>(i), ".oglm");
      if (std::filesystem::exists(gt_path)) gt_maps.push_back(read_label_map(gt_path));
    }
    if (!gt_maps.empty() && gt_maps.size() != trajectory.size()) {
      throw std::runtime_error(config.data_dir + ": incomplete ground-truth maps");
    }
  } else {
    dataset = generate_synthetic(config.scene_spec, config.seed);
    intrinsics = config.scene_spec.intrinsics;
    trajectory = dataset.trajectory;
    gt_maps = dataset.gt_label_maps;
  }

  MappingPipeline pipeline(config.params, intrinsics);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    FrameInput frame;
    frame.pose = trajectory[i];
    if (recorded) {
      const int index = static_cast<int>(i);
      frame.rgb = read_ppm(frame_file(config.data_dir, "rgb", index, ".ppm"));
      frame.depth = read_depth_map(frame_file(config.data_dir, "depth", index, ".ogdm"));
      frame.segmentation = read_input_segmentation(config.data_dir, index);
      const std::string det_path = frame_file(config.data_dir, "det", index, ".txt");
      if (std::filesystem::exists(det_path)) frame.detections = read_detections(det_path);
    } else {
      frame.rgb = dataset.rgb[i];
      frame.depth = dataset.depth[i];
      frame.segmentation = perturb_segmentation(dataset.gt_label_maps[i], config.perturbation,
                                                static_cast<std::uint32_t>(i));
      frame.detections = dataset.detections[i];
    }
    const LabelMap* gt = i < gt_maps.size() ? &gt_maps[i] : nullptr;
    const FrameReport report = pipeline.process_frame(frame, gt);

    metrics.frame_miou.push_back(report.consistent_vs_gt.miou);
    metrics.frame_acc.push_back(report.consistent_vs_gt.acc);
    metrics.label_counts.push_back(report.label_count);
    metrics.prune_counts.push_back(report.pruned);
    metrics.densify_counts.push_back(report.densified);
    metrics.total_overwrites += report.overwrite_events;
  }

  if (!gt_maps.empty()) {
    const FinalEvaluation final_eval = evaluate_final_map(
        pipeline.scene(), trajectory, gt_maps, intrinsics, config.params);
    metrics.final_miou = final_eval.miou;
    metrics.final_acc = final_eval.acc;
    metrics.final_label_count = final_eval.rendered_label_count;
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_scene(pipeline.scene(), config.output_dir + "/scene.ogs1");
    write_metrics(metrics, config.output_dir + "/metrics.txt");
    write_class_table(pipeline.scene().global_table(), config.output_dir + "/table.txt");
  }
  return metrics;
}

BenchReport bench_render(const GaussianScene& scene, const Pose& pose,
                         const CameraIntrinsics& intrinsics, const RenderSettings& settings,
                         int repeats) {
  if (repeats < 1) throw std::invalid_argument("bench_render: repeats must be >= 1");
  RenderSettings rgb_only = settings;
  rgb_only.record_contributors = false;

  using clock = std::chrono::steady_clock;
  auto time_ms = [](auto&& fn) {
    const auto start = clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  rasterize(scene, pose, intrinsics, rgb_only);  // warm up
  BenchReport report;
  report.rgb_ms = std::numeric_limits<double>::max();
  report.label_ms = std::numeric_limits<double>::max();
  for (int i = 0; i < repeats; ++i) {
    report.rgb_ms = std::min(report.rgb_ms, time_ms([&] {
      rasterize(scene, pose, intrinsics, rgb_only);
    }));
  }
  for (int i = 0; i < repeats; ++i) {
    report.label_ms = std::min(report.label_ms, time_ms([&] {
      render_label_map(scene, pose, intrinsics, settings);
    }));
  }
  report.ratio = report.label_ms / report.rgb_ms;
  return report;
}

}  // namespace ogs
