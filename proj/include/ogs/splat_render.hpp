#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ogs/camera.hpp"
#include "ogs/scene.hpp"
#include "ogs/types.hpp"

namespace ogs {

/// A Gaussian projected to the image plane.
struct Splat2D {
  Eigen::Vector2f mean2d = Eigen::Vector2f::Zero();   // pixels
  Eigen::Matrix2f cov2d = Eigen::Matrix2f::Identity();  // pixels^2, regularized
  float depth = 0.0f;                                  // camera-frame z
  std::size_t source_index = 0;
};

struct RenderSettings {
  float near_plane = 0.01f;
  float alpha_cutoff = 1.0f / 255.0f;
  float alpha_max = 0.999f;
  float min_transmittance = 1e-4f;  // early compositing stop
  float cov2d_regularizer = 0.3f;   // added to the cov2d diagonal
  int tile_size = 16;
  int max_contributors_per_pixel = 4096;  // lowest-weight entries dropped beyond this
  int threads = 1;                        // 0 = hardware concurrency
  bool record_contributors = true;
};

/// One surviving blend term at a pixel. weight = alpha * transmittance at
/// composite time (the Gaussian's share of the pixel).
struct PixelContributor {
  std::uint32_t gaussian_index = 0;
  std::uint32_t label = kBackgroundLabel;
  float alpha = 0.0f;  // (alpha_cutoff, 1]
  float depth = 0.0f;
  float weight = 0.0f;
};

/// Per-pixel contributor sequences, depth-ascending, stored pixel-major
/// (index y * width + x) in CSR form.
struct ContributorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> offsets;  // size width*height + 1
  std::vector<PixelContributor> entries;

  std::span<const PixelContributor> at(int x, int y) const {
    const std::size_t p = static_cast<std::size_t>(y) * width + x;
    return {entries.data() + offsets[p], entries.data() + offsets[p + 1]};
  }
};

/// Output of one rasterization pass. depth == 0 marks no coverage;
/// transmittance keeps the residual blending mass per pixel.
struct FrameRender {
  RgbImage rgb;
  ScalarGrid depth;
  ScalarGrid transmittance;
  ContributorImage contributors;  // empty when recording is disabled

  int width() const { return rgb.width(); }
  int height() const { return rgb.height(); }
};

/// cov2d = J W Sigma W^T J^T with W the world-to-camera rotation and J the
/// projection Jacobian; no regularizer. Exposed for orthographic-style tests.
Eigen::Matrix2f project_covariance_raw(const Eigen::Matrix3f& cov3d,
                                       const Eigen::Matrix3f& world_to_cam,
                                       const Eigen::Matrix<float, 2, 3>& jacobian);

/// Perspective projection Jacobian at camera-frame point (x, y, z).
Eigen::Matrix<float, 2, 3> projection_jacobian(const CameraIntrinsics& intrinsics,
                                               const Eigen::Vector3f& cam_point);

/// Projects one Gaussian; nullopt when culled behind the near plane.
/// Throws when the projection is non-finite.
std::optional<Splat2D> project_covariance(const LabeledGaussian& g, std::size_t source_index,
                                          const Pose& pose, const CameraIntrinsics& intrinsics,
                                          const RenderSettings& settings = {});

/// alpha = opacity * exp(-0.5 d^T cov2d^{-1} d) clamped to alpha_max;
/// returns 0 at or below alpha_cutoff. Throws on a singular cov2d.
float evaluate_alpha(const Splat2D& splat, float opacity, const Eigen::Vector2f& pixel,
                     const RenderSettings& settings = {});

/// Conservative per-axis pixel radius outside which alpha stays below the
/// cutoff. Zero when the splat can never reach the cutoff.
Eigen::Vector2f splat_extent(const Splat2D& splat, float opacity, const RenderSettings& settings);

/// Depth-sorted front-to-back alpha compositing of the whole scene.
/// Deterministic for any tile schedule and thread count.
FrameRender rasterize(const GaussianScene& scene, const Pose& pose,
                      const CameraIntrinsics& intrinsics, const RenderSettings& settings = {});

}  // namespace ogs
