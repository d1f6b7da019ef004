#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ogs {

// Dense row-major grids. Image convention: element (y, x), origin at the
// top-left pixel, x growing right and y growing down.
using ScalarGrid = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelGrid = Eigen::Array<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Label 0 is reserved: background in label maps, "unlabeled" on Gaussians.
inline constexpr std::uint32_t kBackgroundLabel = 0;

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Instance-label image; value 0 means background / no coverage.
struct LabelMap {
  LabelGrid labels;  // height x width

  LabelMap() = default;
  LabelMap(int width, int height) : labels(LabelGrid::Zero(height, width)) {}

  int width() const { return static_cast<int>(labels.cols()); }
  int height() const { return static_cast<int>(labels.rows()); }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width() && y >= 0 && y < height(); }

  std::uint32_t& at(int x, int y) { return labels(y, x); }
  std::uint32_t at(int x, int y) const { return labels(y, x); }

  bool same_size(const LabelMap& other) const {
    return width() == other.width() && height() == other.height();
  }

  /// Sorted distinct nonzero labels present in the map.
  std::vector<std::uint32_t> distinct_labels() const;
};

/// Planar float RGB image, components in [0, 1].
struct RgbImage {
  ScalarGrid r, g, b;

  RgbImage() = default;
  RgbImage(int width, int height)
      : r(ScalarGrid::Zero(height, width)),
        g(ScalarGrid::Zero(height, width)),
        b(ScalarGrid::Zero(height, width)) {}

  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }

  Eigen::Vector3f at(int x, int y) const { return {r(y, x), g(y, x), b(y, x)}; }
  void set(int x, int y, const Eigen::Vector3f& c) {
    r(y, x) = c.x();
    g(y, x) = c.y();
    b(y, x) = c.z();
  }
};

/// Open-set 2D detection: class name, score, and an axis-aligned bbox in
/// pixel coordinates ([x0,x1] x [y0,y1], inclusive corners).
struct Detection {
  std::string class_name;
  float score = 0.0f;
  float x0 = 0.0f, y0 = 0.0f, x1 = 0.0f, y1 = 0.0f;
};

}  // namespace ogs
