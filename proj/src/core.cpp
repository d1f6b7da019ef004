#include <cmath>
#include <set>

#include "ogs/camera.hpp"
#include "ogs/gaussian.hpp"
#include "ogs/types.hpp"

namespace ogs {

std::vector<std::uint32_t> LabelMap::distinct_labels() const {
  std::set<std::uint32_t> seen;
  const std::uint32_t* data = labels.data();
  const auto n = static_cast<std::size_t>(labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (data[i] != kBackgroundLabel) seen.insert(data[i]);
  }
  return {seen.begin(), seen.end()};
}

std::optional<std::string> invariant_violation(const LabeledGaussian& g) {
  if (!g.position.allFinite()) return "non-finite position";
  if (!g.scale.allFinite() || (g.scale.array() <= 0.0f).any()) {
    return "scale components must be strictly positive";
  }
  const float qnorm = g.rotation.norm();
  if (!std::isfinite(qnorm) || std::abs(qnorm - 1.0f) > 1e-6f) {
    return "quaternion norm must be 1 within 1e-6";
  }
  if (!std::isfinite(g.opacity) || g.opacity < 0.0f || g.opacity > 1.0f) {
    return "opacity outside [0, 1]";
  }
  if (!g.color.allFinite() || (g.color.array() < 0.0f).any() || (g.color.array() > 1.0f).any()) {
    return "color component outside [0, 1]";
  }
  return std::nullopt;
}

Pose look_at(const Eigen::Vector3f& eye, const Eigen::Vector3f& target,
             const Eigen::Vector3f& up_hint) {
  const Eigen::Vector3f forward = (target - eye).normalized();
  Eigen::Vector3f right = forward.cross(up_hint);
  if (right.squaredNorm() < 1e-12f) {
    // View direction parallel to the up hint; pick an arbitrary roll.
    right = forward.cross(Eigen::Vector3f::UnitX());
    if (right.squaredNorm() < 1e-12f) right = forward.cross(Eigen::Vector3f::UnitY());
  }
  right.normalize();
  const Eigen::Vector3f down = forward.cross(right).normalized();

  Eigen::Matrix3f rot_wc;  // rows are the camera axes expressed in world coords
  rot_wc.row(0) = right;
  rot_wc.row(1) = down;
  rot_wc.row(2) = forward;

  Pose pose;
  pose.rotation = Eigen::Quaternionf(rot_wc).normalized();
  pose.translation = -(rot_wc * eye);
  return pose;
}

}  // namespace ogs
