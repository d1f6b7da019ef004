#include "ogs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ogs/voting.hpp"

namespace ogs {

namespace {

float unit_float(std::mt19937& rng) {
  return static_cast<float>(rng() >> 8) * (1.0f / 16777216.0f);  // [0, 1)
}

float uniform(std::mt19937& rng, float lo, float hi) {
  return lo + (hi - lo) * unit_float(rng);
}

Eigen::Vector3f hue_color(int index, int count) {
  const float h = (static_cast<float>(index) + 0.5f) / static_cast<float>(count) * 6.0f;
  const float x = 1.0f - std::abs(std::fmod(h, 2.0f) - 1.0f);
  Eigen::Vector3f rgb;
  switch (static_cast<int>(h) % 6) {
    case 0: rgb = {1.0f, x, 0.0f}; break;
    case 1: rgb = {x, 1.0f, 0.0f}; break;
    case 2: rgb = {0.0f, 1.0f, x}; break;
    case 3: rgb = {0.0f, x, 1.0f}; break;
    case 4: rgb = {x, 0.0f, 1.0f}; break;
    default: rgb = {1.0f, 0.0f, x}; break;
  }
  return 0.15f + 0.75f * rgb.array();  // keep channels away from 0/1 extremes
}

const char* kPrimitiveNames[3] = {"crate", "ball", "panel"};

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSceneSpec& spec, std::uint32_t seed) {
  if (spec.object_count < 1) throw std::invalid_argument("generate_synthetic: no objects");
  if (spec.gaussians_per_object < 8) {
    throw std::invalid_argument("generate_synthetic: need >= 8 gaussians per object");
  }
  if (spec.frames < 1) throw std::invalid_argument("generate_synthetic: zero-frame trajectory");
  if (!(spec.orbit_span > 0.0f)) throw std::invalid_argument("generate_synthetic: bad orbit span");
  if (!spec.intrinsics.valid()) throw std::invalid_argument("generate_synthetic: bad intrinsics");
  if (!(spec.opacity > 0.0f && spec.opacity <= 1.0f)) {
    throw std::invalid_argument("generate_synthetic: opacity outside (0,1]");
  }

  SyntheticDataset out;
  std::mt19937 rng(seed);
  const float two_pi = 2.0f * std::numbers::pi_v<float>;

  std::vector<LabeledGaussian> batch;
  batch.reserve(static_cast<std::size_t>(spec.object_count) * spec.gaussians_per_object);
  const float iso_scale =
      spec.object_size * 1.5f / std::cbrt(static_cast<float>(spec.gaussians_per_object));

  for (int k = 0; k < spec.object_count; ++k) {
    const std::uint32_t label = static_cast<std::uint32_t>(k + 1);
    const float angle = two_pi * static_cast<float>(k) / static_cast<float>(spec.object_count);
    const Eigen::Vector3f base = spec.center + Eigen::Vector3f(spec.ring_radius * std::cos(angle),
                                                               spec.ring_radius * std::sin(angle),
                                                               0.0f);
    const Eigen::Vector3f color = hue_color(k, spec.object_count);
    const int primitive = k % 3;
    const float s = spec.object_size;
    const float yaw = uniform(rng, 0.0f, std::numbers::pi_v<float>);
    const Eigen::Quaternionf yaw_rot(Eigen::AngleAxisf(yaw, Eigen::Vector3f::UnitZ()));

    for (int j = 0; j < spec.gaussians_per_object; ++j) {
      LabeledGaussian g;
      g.label = label;
      g.opacity = spec.opacity;
      g.color = (color.array() + Eigen::Array3f(uniform(rng, -0.05f, 0.05f),
                                                uniform(rng, -0.05f, 0.05f),
                                                uniform(rng, -0.05f, 0.05f)))
                    .cwiseMax(0.0f)
                    .cwiseMin(1.0f);
      g.scale = Eigen::Vector3f::Constant(iso_scale);
      switch (primitive) {
        case 0: {  // box
          const Eigen::Vector3f half(s, 0.8f * s, 0.6f * s);
          g.position = base + Eigen::Vector3f(uniform(rng, -half.x(), half.x()),
                                              uniform(rng, -half.y(), half.y()),
                                              uniform(rng, -half.z(), half.z()));
          break;
        }
        case 1: {  // sphere
          const float radius = 0.8f * s * std::cbrt(unit_float(rng));
          const float cos_t = uniform(rng, -1.0f, 1.0f);
          const float sin_t = std::sqrt(std::max(0.0f, 1.0f - cos_t * cos_t));
          const float phi = uniform(rng, 0.0f, two_pi);
          g.position = base + radius * Eigen::Vector3f(sin_t * std::cos(phi),
                                                       sin_t * std::sin(phi), cos_t);
          break;
        }
        default: {  // thin panel, yawed about z
          const Eigen::Vector3f local(uniform(rng, -s, s), uniform(rng, -0.75f * s, 0.75f * s),
                                      uniform(rng, -0.06f * s, 0.06f * s));
          g.position = base + yaw_rot * local;
          g.rotation = yaw_rot;
          g.scale = Eigen::Vector3f(iso_scale, iso_scale, 0.3f * iso_scale);
          break;
        }
      }
      batch.push_back(g);
    }
    out.classes.entries[label] = {std::string(kPrimitiveNames[primitive]) + "_" +
                                      std::to_string(label),
                                  0.9f};
  }
  out.gt_scene.add_gaussians(batch);

  const float cos_e = std::cos(spec.orbit_elevation);
  const float sin_e = std::sin(spec.orbit_elevation);
  for (int i = 0; i < spec.frames; ++i) {
    const float theta = spec.orbit_span * static_cast<float>(i) / static_cast<float>(spec.frames);
    const Eigen::Vector3f eye =
        spec.center + spec.orbit_radius * Eigen::Vector3f(std::cos(theta) * cos_e,
                                                          std::sin(theta) * cos_e, sin_e);
    out.trajectory.push_back(look_at(eye, spec.center));
  }

  for (const Pose& pose : out.trajectory) {
    LabelRenderResult view = render_label_map(out.gt_scene, pose, spec.intrinsics);
    ScalarGrid depth(spec.intrinsics.height, spec.intrinsics.width);
    for (int y = 0; y < spec.intrinsics.height; ++y) {
      for (int x = 0; x < spec.intrinsics.width; ++x) {
        // Sensor model: front-surface depth, not the blended mean. The
        // weighted median over contributors ignores the see-through tail
        // into the object's interior and far side.
        const float coverage = 1.0f - view.frame.transmittance(y, x);
        if (coverage < 0.5f) {
          depth(y, x) = 0.0f;
          continue;
        }
        float acc = 0.0f;
        float median = 0.0f;
        for (const PixelContributor& c : view.frame.contributors.at(x, y)) {
          acc += c.weight;
          median = c.depth;
          if (acc >= 0.5f * coverage) break;
        }
        depth(y, x) = median;
      }
    }
    std::vector<Detection> frame_detections;
    for (const std::uint32_t label : view.labels.label_map.distinct_labels()) {
      int x0 = spec.intrinsics.width, y0 = spec.intrinsics.height, x1 = -1, y1 = -1;
      for (int y = 0; y < spec.intrinsics.height; ++y) {
        for (int x = 0; x < spec.intrinsics.width; ++x) {
          if (view.labels.label_map.labels(y, x) != label) continue;
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
      }
      const ClassEntry* entry = out.classes.find(label);
      frame_detections.push_back({entry->class_name, entry->score, static_cast<float>(x0),
                                  static_cast<float>(y0), static_cast<float>(x1),
                                  static_cast<float>(y1)});
    }
    out.gt_label_maps.push_back(std::move(view.labels.label_map));
    out.rgb.push_back(std::move(view.frame.rgb));
    out.depth.push_back(std::move(depth));
    out.detections.push_back(std::move(frame_detections));
  }
  return out;
}

InputSegmentation perturb_segmentation(const LabelMap& gt_map, const PerturbationSpec& spec,
                                       std::uint32_t frame_index) {
  std::seed_seq frame_seed{spec.seed, 0x9E3779B9u, frame_index};
  std::mt19937 rng(frame_seed);

  const auto labels = gt_map.distinct_labels();
  std::map<std::uint32_t, std::vector<Pixel>> support;
  for (int y = 0; y < gt_map.height(); ++y) {
    for (int x = 0; x < gt_map.width(); ++x) {
      const std::uint32_t l = gt_map.labels(y, x);
      if (l != kBackgroundLabel) support[l].push_back({x, y});
    }
  }

  // Optional merge of the two nearest visible objects.
  std::uint32_t merge_a = 0, merge_b = 0;
  if (spec.merge_prob > 0.0f && labels.size() >= 2) {
    const float u = unit_float(rng);
    if (u < spec.merge_prob) {
      std::map<std::uint32_t, Eigen::Vector2f> centroid;
      for (const std::uint32_t l : labels) {
        Eigen::Vector2f c = Eigen::Vector2f::Zero();
        for (const Pixel& p : support[l]) c += Eigen::Vector2f(p.x, p.y);
        centroid[l] = c / static_cast<float>(support[l].size());
      }
      float best = std::numeric_limits<float>::max();
      for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
          const float d = (centroid[labels[i]] - centroid[labels[j]]).squaredNorm();
          if (d < best) {
            best = d;
            merge_a = labels[i];
            merge_b = labels[j];
          }
        }
      }
    }
  }

  struct Segment {
    std::vector<Pixel> pixels;
  };
  std::vector<Segment> segments;

  for (const std::uint32_t label : labels) {
    if (label == merge_b) continue;  // folded into merge_a's segment
    const bool split = unit_float(rng) < spec.oversegment_prob && label != merge_a;

    if (label == merge_a) {
      Segment merged;
      for (int y = 0; y < gt_map.height(); ++y) {
        for (int x = 0; x < gt_map.width(); ++x) {
          const std::uint32_t l = gt_map.labels(y, x);
          if (l == merge_a || l == merge_b) merged.pixels.push_back({x, y});
        }
      }
      segments.push_back(std::move(merged));
      continue;
    }
    if (!split) {
      segments.push_back({support[label]});
      continue;
    }

    int parts;
    float angle;
    if (spec.stable_split) {
      std::seed_seq object_seed{spec.seed, 0x0A11CE5u, label};
      std::mt19937 object_rng(object_seed);
      parts = spec.split_parts_min +
              static_cast<int>(object_rng() %
                               static_cast<std::uint32_t>(spec.split_parts_max -
                                                          spec.split_parts_min + 1));
      angle = uniform(object_rng, 0.0f, std::numbers::pi_v<float>);
    } else {
      parts = spec.split_parts_min +
              static_cast<int>(rng() % static_cast<std::uint32_t>(spec.split_parts_max -
                                                                  spec.split_parts_min + 1));
      angle = uniform(rng, 0.0f, std::numbers::pi_v<float>);
    }

    // Equal-population bands perpendicular to the split direction; stable
    // sort keeps scan order within equal projections.
    std::vector<Pixel> ordered = support[label];
    const float c = std::cos(angle), s = std::sin(angle);
    std::stable_sort(ordered.begin(), ordered.end(), [c, s](const Pixel& a, const Pixel& b) {
      return c * a.x + s * a.y < c * b.x + s * b.y;
    });
    const std::size_t n = ordered.size();
    for (int j = 0; j < parts; ++j) {
      const std::size_t lo = n * j / parts;
      const std::size_t hi = n * (j + 1) / parts;
      if (lo == hi) continue;
      segments.push_back({std::vector<Pixel>(ordered.begin() + lo, ordered.begin() + hi)});
    }
  }

  std::vector<std::uint32_t> ids(segments.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i + 1);
  if (spec.permute_labels && ids.size() > 1) {
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
      const std::size_t j = rng() % (i + 1);
      std::swap(ids[i], ids[j]);
    }
  }

  InputSegmentation out;
  out.label_map = LabelMap(gt_map.width(), gt_map.height());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (const Pixel& p : segments[i].pixels) out.label_map.labels(p.y, p.x) = ids[i];
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const float noise = spec.confidence_noise * uniform(rng, -1.0f, 1.0f);
    out.confidences[ids[i]] = std::clamp(spec.confidence_base + noise, 0.05f, 1.0f);
    out.table.entries[ids[i]] = ClassEntry{};  // associated later from detections
  }
  return out;
}

}  // namespace ogs
