#pragma once

#include <Eigen/Geometry>

#include <optional>
#include <string>

#include "ogs/types.hpp"

namespace ogs {

/// One anisotropic labeled splat. The covariance is kept factored as per-axis
/// standard deviations plus a rotation, so it stays positive definite under
/// every edit; the full 3x3 matrix is reconstructed on demand.
struct LabeledGaussian {
  Eigen::Vector3f position = Eigen::Vector3f::Zero();          // world units
  Eigen::Vector3f scale = Eigen::Vector3f::Constant(0.01f);    // per-axis stddev, > 0
  Eigen::Quaternionf rotation = Eigen::Quaternionf::Identity();  // unit norm
  float opacity = 1.0f;                                        // [0, 1]
  Eigen::Vector3f color = Eigen::Vector3f::Zero();             // [0, 1] each
  std::uint32_t label = kBackgroundLabel;

  /// Sigma = R diag(scale^2) R^T.
  Eigen::Matrix3f covariance() const {
    const Eigen::Matrix3f rot = rotation.toRotationMatrix();
    return rot * scale.array().square().matrix().asDiagonal() * rot.transpose();
  }
};

/// Returns a reason string when the gaussian violates an invariant
/// (non-positive scale, non-unit quaternion, out-of-range opacity/color,
/// non-finite fields), or nullopt when it is well formed.
std::optional<std::string> invariant_violation(const LabeledGaussian& g);

}  // namespace ogs
