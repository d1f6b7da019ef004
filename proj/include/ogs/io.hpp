#pragma once

#include <span>
#include <string>
#include <vector>

#include "ogs/camera.hpp"
#include "ogs/scene.hpp"
#include "ogs/types.hpp"

namespace ogs {

// All binary formats are little-endian. Magics: scene "OGS1", label map
// "OGLM", confidence map "OGCM", depth map "OGDM". Malformed input raises
// std::runtime_error naming the file.

void write_scene(const GaussianScene& scene, const std::string& path);
GaussianScene read_scene(const std::string& path, std::size_t max_labels = kDefaultMaxLabels);

void write_label_map(const LabelMap& map, const std::string& path);
LabelMap read_label_map(const std::string& path);

void write_confidence_map(const ScalarGrid& map, const std::string& path);
ScalarGrid read_confidence_map(const std::string& path);

void write_depth_map(const ScalarGrid& map, const std::string& path);
ScalarGrid read_depth_map(const std::string& path);

// Binary PPM (P6, maxval 255); floats are clamped to [0,1] and rounded.
void write_ppm(const RgbImage& image, const std::string& path);
RgbImage read_ppm(const std::string& path);

// Trajectory files store camera-to-world lines `tx ty tz qx qy qz qw`; the
// in-memory poses are world-to-camera, so IO inverts in both directions.
void write_trajectory(std::span<const Pose> world_to_camera, const std::string& path);
std::vector<Pose> read_trajectory(const std::string& path);

// One detection per line: `class_name score x0 y0 x1 y1`.
void write_detections(std::span<const Detection> detections, const std::string& path);
std::vector<Detection> read_detections(const std::string& path);

// One entry per line: `label_id class_name score`.
void write_class_table(const LabelClassTable& table, const std::string& path);
LabelClassTable read_class_table(const std::string& path);

}  // namespace ogs
