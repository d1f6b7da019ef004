#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "ogs/io.hpp"

using namespace ogs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ogs_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

GaussianScene random_scene(std::uint32_t seed, int count) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> pos(-2.0f, 2.0f);
  std::uniform_real_distribution<float> scale(0.01f, 0.4f);
  std::uniform_real_distribution<float> unit(0.001f, 1.0f);
  std::vector<LabeledGaussian> batch;
  for (int i = 0; i < count; ++i) {
    LabeledGaussian g;
    g.position = {pos(rng), pos(rng), pos(rng)};
    g.scale = {scale(rng), scale(rng), scale(rng)};
    g.rotation = Eigen::Quaternionf(unit(rng), pos(rng), pos(rng), pos(rng)).normalized();
    g.opacity = unit(rng);
    g.color = {unit(rng), unit(rng), unit(rng)};
    g.label = 1 + (i % 7);
    batch.push_back(g);
  }
  GaussianScene scene;
  scene.add_gaussians(batch);
  return scene;
}

}  // namespace

TEST_CASE("scene files round-trip bitwise and rewrite byte-identically") {
  const TempDir dir;
  const GaussianScene scene = random_scene(8, 40);
  const std::string first = dir.file("scene.ogs1");
  write_scene(scene, first);

  const GaussianScene loaded = read_scene(first);
  REQUIRE(loaded.size() == scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const LabeledGaussian& a = scene.gaussian(i);
    const LabeledGaussian& b = loaded.gaussian(i);
    CHECK(a.position == b.position);
    CHECK(a.scale == b.scale);
    CHECK(a.rotation.coeffs() == b.rotation.coeffs());
    CHECK(a.opacity == b.opacity);
    CHECK(a.color == b.color);
    CHECK(a.label == b.label);
  }
  // Loading registers the labels afresh with zero confidence.
  CHECK(loaded.label_registry().size() == 7);
  CHECK(loaded.label_registry().at(1).confidence == 0.0f);

  const std::string second = dir.file("scene2.ogs1");
  write_scene(loaded, second);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("label, confidence, and depth maps round-trip exactly") {
  const TempDir dir;
  std::mt19937 rng(19);

  LabelMap labels(13, 7);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 13; ++x) labels.at(x, y) = rng() % 9;
  }
  write_label_map(labels, dir.file("m.oglm"));
  const LabelMap labels2 = read_label_map(dir.file("m.oglm"));
  CHECK((labels.labels == labels2.labels).all());

  std::uniform_real_distribution<float> value(-5.0f, 5.0f);
  ScalarGrid grid(6, 9);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 9; ++x) grid(y, x) = value(rng);
  }
  write_confidence_map(grid, dir.file("c.ogcm"));
  CHECK((read_confidence_map(dir.file("c.ogcm")) == grid).all());
  write_depth_map(grid, dir.file("d.ogdm"));
  CHECK((read_depth_map(dir.file("d.ogdm")) == grid).all());

  // The two grid formats are not interchangeable.
  CHECK_THROWS_AS(read_depth_map(dir.file("c.ogcm")), std::runtime_error);

  write_label_map(labels, dir.file("m2.oglm"));
  CHECK(slurp(dir.file("m.oglm")) == slurp(dir.file("m2.oglm")));
}

TEST_CASE("ppm quantizes once: a second write is byte-identical") {
  const TempDir dir;
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> value(-0.2f, 1.2f);  // exercise clamping
  RgbImage image(17, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 17; ++x) {
      image.set(x, y, {value(rng), value(rng), value(rng)});
    }
  }
  write_ppm(image, dir.file("a.ppm"));
  const RgbImage decoded = read_ppm(dir.file("a.ppm"));
  CHECK(decoded.width() == 17);
  CHECK(decoded.height() == 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 17; ++x) {
      const Eigen::Vector3f original = image.at(x, y);
      const Eigen::Vector3f read_back = decoded.at(x, y);
      for (int i = 0; i < 3; ++i) {
        const float clamped = std::clamp(original[i], 0.0f, 1.0f);
        CHECK(read_back[i] ==
              static_cast<float>(std::lround(clamped * 255.0f)) / 255.0f);
      }
    }
  }
  write_ppm(decoded, dir.file("b.ppm"));
  CHECK(slurp(dir.file("a.ppm")) == slurp(dir.file("b.ppm")));
}

TEST_CASE("trajectories store camera-to-world text and invert back") {
  const TempDir dir;
  std::vector<Pose> poses;
  for (int i = 0; i < 5; ++i) {
    const float angle = 0.4f * static_cast<float>(i);
    poses.push_back(look_at({3.0f * std::cos(angle), 3.0f * std::sin(angle), 1.0f},
                            {0.0f, 0.0f, 0.2f}));
  }
  write_trajectory(poses, dir.file("traj.txt"));
  const std::vector<Pose> loaded = read_trajectory(dir.file("traj.txt"));
  REQUIRE(loaded.size() == poses.size());
  // Compare by action: quaternion sign and text rounding both wash out.
  const Eigen::Vector3f probes[3] = {{0, 0, 0}, {1.0f, -0.5f, 2.0f}, {-2.0f, 0.3f, 0.1f}};
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (const Eigen::Vector3f& p : probes) {
      CHECK((poses[i].apply(p) - loaded[i].apply(p)).norm() < 1e-5f);
    }
  }

  // Comments and blank lines are skipped; short lines are an error.
  std::ofstream os(dir.file("traj2.txt"));
  os << "# comment\n\n0 0 0 0 0 0 1\n";
  os.close();
  CHECK(read_trajectory(dir.file("traj2.txt")).size() == 1);
  std::ofstream bad(dir.file("traj3.txt"));
  bad << "0 0 0 0\n";
  bad.close();
  CHECK_THROWS_AS(read_trajectory(dir.file("traj3.txt")), std::runtime_error);
}

TEST_CASE("detection and class-table text round-trips") {
  const TempDir dir;
  const std::vector<Detection> detections{
      {"crate_1", 0.875f, 10.0f, 20.0f, 30.0f, 40.0f},
      {"ball_2", 0.5f, 0.0f, 0.0f, 319.0f, 239.0f},
  };
  write_detections(detections, dir.file("det.txt"));
  const auto loaded = read_detections(dir.file("det.txt"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].class_name == "crate_1");
  CHECK(loaded[0].score == 0.875f);
  CHECK(loaded[1].x1 == 319.0f);

  LabelClassTable table;
  table.entries[3] = {"panel_3", 0.25f};
  table.entries[11] = {"None", 0.0f};
  write_class_table(table, dir.file("table.txt"));
  const LabelClassTable reloaded = read_class_table(dir.file("table.txt"));
  REQUIRE(reloaded.entries.size() == 2);
  CHECK(reloaded.entries.at(3).class_name == "panel_3");
  CHECK(reloaded.entries.at(3).score == 0.25f);
  CHECK(reloaded.entries.at(11).class_name == "None");

  std::ofstream bad(dir.file("badtable.txt"));
  bad << "7 lonely\n";
  bad.close();
  CHECK_THROWS_AS(read_class_table(dir.file("badtable.txt")), std::runtime_error);
}

TEST_CASE("malformed binary inputs fail loudly with the path in the message") {
  const TempDir dir;
  const GaussianScene scene = random_scene(2, 5);
  const std::string path = dir.file("scene.ogs1");
  write_scene(scene, path);

  // Wrong magic: a label map is not a scene.
  LabelMap map(2, 2);
  write_label_map(map, dir.file("map.oglm"));
  bool threw = false;
  try {
    read_scene(dir.file("map.oglm"));
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("map.oglm") != std::string::npos);
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
  CHECK(threw);

  // Truncation mid-gaussian.
  const std::vector<char> bytes = slurp(path);
  std::ofstream cut(dir.file("cut.ogs1"), std::ios::binary);
  cut.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
  cut.close();
  CHECK_THROWS_AS(read_scene(dir.file("cut.ogs1")), std::runtime_error);

  CHECK_THROWS_AS(read_label_map(dir.file("missing.oglm")), std::runtime_error);
}
