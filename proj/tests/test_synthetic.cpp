#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ogs/pruning.hpp"
#include "ogs/synthetic.hpp"

using namespace ogs;

namespace {

SyntheticSceneSpec small_spec() {
  SyntheticSceneSpec spec;
  spec.object_count = 3;
  spec.gaussians_per_object = 8;
  spec.frames = 3;
  spec.intrinsics = {60.0f, 60.0f, 40.0f, 30.0f, 80, 60};
  return spec;
}

bool same_gaussian(const LabeledGaussian& a, const LabeledGaussian& b) {
  return a.position == b.position && a.scale == b.scale &&
         a.rotation.coeffs() == b.rotation.coeffs() && a.opacity == b.opacity &&
         a.color == b.color && a.label == b.label;
}

LabelMap two_blocks(int width = 14, int height = 10) {
  LabelMap map(width, height);
  for (int y = 1; y < 6; ++y) {
    for (int x = 1; x < 6; ++x) map.at(x, y) = 1;
  }
  for (int y = 3; y < 9; ++y) {
    for (int x = 8; x < 13; ++x) map.at(x, y) = 2;
  }
  return map;
}

// Support of each output label, for partition comparisons that ignore ids.
std::set<std::vector<Pixel>> partition_of(const LabelMap& map) {
  std::map<std::uint32_t, std::vector<Pixel>> by_label;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (map.at(x, y) != kBackgroundLabel) by_label[map.at(x, y)].push_back({x, y});
    }
  }
  std::set<std::vector<Pixel>> parts;
  for (auto& [label, pixels] : by_label) parts.insert(std::move(pixels));
  return parts;
}

}  // namespace

TEST_CASE("generation is bit-deterministic for a fixed spec and seed") {
  const SyntheticSceneSpec spec = small_spec();
  const SyntheticDataset a = generate_synthetic(spec, 42);
  const SyntheticDataset b = generate_synthetic(spec, 42);

  REQUIRE(a.gt_scene.size() == b.gt_scene.size());
  for (std::size_t i = 0; i < a.gt_scene.size(); ++i) {
    CHECK(same_gaussian(a.gt_scene.gaussian(i), b.gt_scene.gaussian(i)));
  }
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(a.trajectory[i].rotation.coeffs() == b.trajectory[i].rotation.coeffs());
    CHECK(a.trajectory[i].translation == b.trajectory[i].translation);
  }
  for (std::size_t i = 0; i < a.gt_label_maps.size(); ++i) {
    CHECK((a.gt_label_maps[i].labels == b.gt_label_maps[i].labels).all());
    CHECK((a.depth[i] == b.depth[i]).all());
    CHECK((a.rgb[i].r == b.rgb[i].r).all());
  }

  const SyntheticDataset c = generate_synthetic(spec, 43);
  bool any_differs = false;
  for (std::size_t i = 0; i < a.gt_scene.size(); ++i) {
    if (!same_gaussian(a.gt_scene.gaussian(i), c.gt_scene.gaussian(i))) any_differs = true;
  }
  CHECK(any_differs);
}

TEST_CASE("the ground-truth scene matches the spec census and class table") {
  const SyntheticSceneSpec spec = small_spec();
  const SyntheticDataset data = generate_synthetic(spec, 7);

  CHECK(data.gt_scene.size() == 24);
  const auto census = data.gt_scene.label_census();
  REQUIRE(census.size() == 3);
  for (std::uint32_t label = 1; label <= 3; ++label) CHECK(census.at(label) == 8);

  // Primitive names cycle crate/ball/panel in label order.
  CHECK(data.classes.entries.at(1).class_name == "crate_1");
  CHECK(data.classes.entries.at(2).class_name == "ball_2");
  CHECK(data.classes.entries.at(3).class_name == "panel_3");
  CHECK(data.classes.entries.at(1).score == 0.9f);
}

TEST_CASE("the trajectory orbits the ring center at the spec radius and elevation") {
  const SyntheticSceneSpec spec = small_spec();
  const SyntheticDataset data = generate_synthetic(spec, 11);

  for (std::size_t i = 0; i < data.trajectory.size(); ++i) {
    const Pose& pose = data.trajectory[i];
    const Eigen::Vector3f cam_center = pose.inverse().translation;
    const Eigen::Vector3f radial = cam_center - spec.center;
    CHECK(radial.norm() == doctest::Approx(spec.orbit_radius).epsilon(1e-5));
    CHECK(radial.z() ==
          doctest::Approx(spec.orbit_radius * std::sin(spec.orbit_elevation)).epsilon(1e-5));

    const float expected_azimuth =
        spec.orbit_span * static_cast<float>(i) / static_cast<float>(spec.frames);
    CHECK(std::atan2(radial.y(), radial.x()) == doctest::Approx(expected_azimuth).epsilon(1e-4));

    // look_at points the optical axis at the ring center.
    const Eigen::Vector3f forward = pose.rotation.toRotationMatrix().row(2).transpose();
    const Eigen::Vector3f to_center = (spec.center - cam_center).normalized();
    CHECK(forward.dot(to_center) == doctest::Approx(1.0f).epsilon(1e-5));
  }
}

TEST_CASE("label maps, depth, and detections are mutually consistent") {
  const SyntheticSceneSpec spec = small_spec();
  const SyntheticDataset data = generate_synthetic(spec, 3);

  REQUIRE(data.gt_label_maps.size() == 3);
  REQUIRE(data.depth.size() == 3);
  REQUIRE(data.detections.size() == 3);

  for (std::size_t f = 0; f < 3; ++f) {
    const LabelMap& map = data.gt_label_maps[f];
    CHECK(map.width() == spec.intrinsics.width);
    CHECK(map.height() == spec.intrinsics.height);

    for (int y = 0; y < map.height(); ++y) {
      for (int x = 0; x < map.width(); ++x) {
        CHECK(map.at(x, y) <= 3);
        // depth is the sensed surface wherever a label is present, and only there
        CHECK((data.depth[f](y, x) > 0.0f) == (map.at(x, y) != kBackgroundLabel));
      }
    }

    const auto visible = map.distinct_labels();
    REQUIRE(data.detections[f].size() == visible.size());
    for (std::size_t d = 0; d < visible.size(); ++d) {
      const Detection& det = data.detections[f][d];
      CHECK(det.class_name == data.classes.entries.at(visible[d]).class_name);
      CHECK(det.score == 0.9f);
      CHECK(det.x0 >= 0.0f);
      CHECK(det.y0 >= 0.0f);
      CHECK(det.x1 < static_cast<float>(map.width()));
      CHECK(det.y1 < static_cast<float>(map.height()));
      // The bbox bounds the label's support exactly.
      for (const Pixel& p : mask_pixels(map, visible[d])) {
        CHECK(static_cast<float>(p.x) >= det.x0);
        CHECK(static_cast<float>(p.x) <= det.x1);
        CHECK(static_cast<float>(p.y) >= det.y0);
        CHECK(static_cast<float>(p.y) <= det.y1);
      }
    }
  }
}

TEST_CASE("spec validation rejects degenerate requests") {
  SyntheticSceneSpec spec = small_spec();
  spec.object_count = 0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  spec = small_spec();
  spec.gaussians_per_object = 7;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  spec = small_spec();
  spec.frames = 0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  spec = small_spec();
  spec.orbit_span = 0.0f;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  spec = small_spec();
  spec.intrinsics.fx = 0.0f;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  spec = small_spec();
  spec.opacity = 1.5f;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
}

TEST_CASE("perturbation is deterministic per (seed, frame) and varies across frames") {
  const LabelMap gt = two_blocks();
  PerturbationSpec spec;
  spec.permute_labels = true;
  spec.oversegment_prob = 0.5f;
  spec.confidence_noise = 0.1f;
  spec.seed = 9;

  const InputSegmentation a = perturb_segmentation(gt, spec, 4);
  const InputSegmentation b = perturb_segmentation(gt, spec, 4);
  CHECK((a.label_map.labels == b.label_map.labels).all());
  CHECK(a.confidences == b.confidences);
}

TEST_CASE("pure permutation preserves the partition and covers every label") {
  const LabelMap gt = two_blocks();
  PerturbationSpec spec;
  spec.permute_labels = true;
  spec.confidence_base = 0.8f;
  spec.seed = 21;

  const InputSegmentation out = perturb_segmentation(gt, spec, 0);
  CHECK(partition_of(out.label_map) == partition_of(gt));
  for (const std::uint32_t label : out.label_map.distinct_labels()) {
    CHECK(out.confidences.at(label) == 0.8f);  // zero noise passes the base through
    CHECK(out.table.entries.at(label).class_name == "None");
  }
  // Background stays background.
  CHECK(out.label_map.at(0, 0) == 0);
  CHECK((out.label_map.labels != 0).count() == (gt.labels != 0).count());
}

TEST_CASE("forced over-segmentation splits each object into the requested parts") {
  const LabelMap gt = two_blocks();
  PerturbationSpec spec;
  spec.permute_labels = false;
  spec.oversegment_prob = 1.0f;
  spec.split_parts_min = 3;
  spec.split_parts_max = 3;
  spec.seed = 5;

  const InputSegmentation out = perturb_segmentation(gt, spec, 0);
  const auto labels = out.label_map.distinct_labels();
  CHECK(labels.size() == 6);  // two objects, three bands each

  // The union of the bands reproduces each object's support exactly.
  std::map<std::uint32_t, std::set<std::uint32_t>> bands_per_object;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      CHECK((gt.at(x, y) != 0) == (out.label_map.at(x, y) != 0));
      if (gt.at(x, y) != 0) bands_per_object[gt.at(x, y)].insert(out.label_map.at(x, y));
    }
  }
  CHECK(bands_per_object.at(1).size() == 3);
  CHECK(bands_per_object.at(2).size() == 3);

  // Each band belongs to exactly one object.
  std::set<std::uint32_t> all_bands;
  for (const auto& [object, bands] : bands_per_object) {
    for (const std::uint32_t band : bands) CHECK(all_bands.insert(band).second);
  }
}

TEST_CASE("stable splits reuse the same cut across frames") {
  const LabelMap gt = two_blocks();
  PerturbationSpec spec;
  spec.permute_labels = false;
  spec.oversegment_prob = 1.0f;
  spec.stable_split = true;
  spec.seed = 2;

  const InputSegmentation f0 = perturb_segmentation(gt, spec, 0);
  const InputSegmentation f5 = perturb_segmentation(gt, spec, 5);
  CHECK((f0.label_map.labels == f5.label_map.labels).all());

  spec.stable_split = false;
  const InputSegmentation g0 = perturb_segmentation(gt, spec, 0);
  const InputSegmentation g1 = perturb_segmentation(gt, spec, 1);
  CHECK(partition_of(g0.label_map) != partition_of(g1.label_map));
}

TEST_CASE("forced merge fuses the nearest pair into one segment") {
  const LabelMap gt = two_blocks();
  PerturbationSpec spec;
  spec.permute_labels = false;
  spec.merge_prob = 1.0f;
  spec.seed = 3;

  const InputSegmentation out = perturb_segmentation(gt, spec, 0);
  const auto labels = out.label_map.distinct_labels();
  REQUIRE(labels.size() == 1);
  // The merged segment covers both objects' pixels.
  CHECK((out.label_map.labels != 0).count() == (gt.labels != 0).count());
}

TEST_CASE("confidences are clamped into [0.05, 1]") {
  const LabelMap gt = two_blocks();
  PerturbationSpec spec;
  spec.confidence_base = 0.97f;
  spec.confidence_noise = 0.5f;
  for (std::uint32_t frame = 0; frame < 24; ++frame) {
    const InputSegmentation out = perturb_segmentation(gt, spec, frame);
    for (const auto& [label, confidence] : out.confidences) {
      CHECK(confidence >= 0.05f);
      CHECK(confidence <= 1.0f);
    }
  }
}
