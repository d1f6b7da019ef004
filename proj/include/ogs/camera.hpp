#pragma once

#include <Eigen/Geometry>

namespace ogs {

/// Pinhole intrinsics in pixels. Pixel (x, y) is sampled at its center
/// (x + 0.5, y + 0.5).
struct CameraIntrinsics {
  float fx = 0.0f;
  float fy = 0.0f;
  float cx = 0.0f;
  float cy = 0.0f;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0.0f && fy > 0.0f && width > 0 && height > 0 && cx >= 0.0f &&
           cx < static_cast<float>(width) && cy >= 0.0f && cy < static_cast<float>(height);
  }
};

/// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
/// Camera axes: +x right, +y down, +z forward (viewing direction).
struct Pose {
  Eigen::Quaternionf rotation = Eigen::Quaternionf::Identity();
  Eigen::Vector3f translation = Eigen::Vector3f::Zero();

  Eigen::Vector3f apply(const Eigen::Vector3f& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.conjugate();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }
};

/// World-to-camera pose looking from eye toward target; up_hint fixes roll.
/// Degenerate when the view direction is parallel to up_hint.
Pose look_at(const Eigen::Vector3f& eye, const Eigen::Vector3f& target,
             const Eigen::Vector3f& up_hint = Eigen::Vector3f::UnitZ());

}  // namespace ogs
