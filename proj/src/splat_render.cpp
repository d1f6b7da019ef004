#include "ogs/splat_render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ogs {

namespace {

// Inverse of the (regularized) 2x2 covariance, kept as the three distinct
// entries of the symmetric conic matrix.
struct Conic {
  float a = 0.0f;  // inv(0,0)
  float b = 0.0f;  // inv(0,1)
  float c = 0.0f;  // inv(1,1)
};

Conic conic_from_cov(const Eigen::Matrix2f& cov) {
  const float det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!std::isfinite(det) || det <= 0.0f) {
    throw std::runtime_error("evaluate_alpha: singular 2d covariance");
  }
  const float inv_det = 1.0f / det;
  return {cov(1, 1) * inv_det, -cov(0, 1) * inv_det, cov(0, 0) * inv_det};
}

// Shared by the public evaluate_alpha and the rasterizer hot loop so both
// paths produce bit-identical alphas.
float alpha_from_conic(const Conic& conic, float opacity, float dx, float dy,
                       const RenderSettings& settings) {
  const float power = -0.5f * (conic.a * dx * dx + conic.c * dy * dy) - conic.b * dx * dy;
  if (power > 0.0f) return 0.0f;
  const float alpha = std::min(settings.alpha_max, opacity * std::exp(power));
  return alpha > settings.alpha_cutoff ? alpha : 0.0f;
}

struct PreparedSplat {
  Eigen::Vector2f mean;
  Conic conic;
  float depth;
  float opacity;
  Eigen::Vector3f color;
  std::uint32_t label;
  std::uint32_t source_index;
  int x0, y0, x1, y1;  // inclusive pixel bounds, clipped to the image
};

struct TileResult {
  std::vector<std::uint32_t> counts;        // per local pixel
  std::vector<PixelContributor> entries;    // local pixel-major
};

// Compact in-loop record; the full entry (weight, depth, label) is
// reconstructed per tile afterwards so the hot loop only streams 12 bytes.
struct RecordedHit {
  std::uint32_t splat;  // index into the prepared-splat array
  std::uint32_t local;  // tile-local pixel
  float alpha;
};

struct RecordScratch {
  std::vector<RecordedHit> hits;
  std::vector<std::uint32_t> cursor;
  std::vector<float> replay_t;
  std::vector<std::vector<PixelContributor>> lists;  // cap-bounded fallback
};

}  // namespace

Eigen::Matrix<float, 2, 3> projection_jacobian(const CameraIntrinsics& intrinsics,
                                               const Eigen::Vector3f& cam_point) {
  const float x = cam_point.x(), y = cam_point.y(), z = cam_point.z();
  const float inv_z = 1.0f / z;
  const float inv_z2 = inv_z * inv_z;
  Eigen::Matrix<float, 2, 3> jac;
  jac << intrinsics.fx * inv_z, 0.0f, -intrinsics.fx * x * inv_z2,  //
      0.0f, intrinsics.fy * inv_z, -intrinsics.fy * y * inv_z2;
  return jac;
}

Eigen::Matrix2f project_covariance_raw(const Eigen::Matrix3f& cov3d,
                                       const Eigen::Matrix3f& world_to_cam,
                                       const Eigen::Matrix<float, 2, 3>& jacobian) {
  const Eigen::Matrix<float, 2, 3> m = jacobian * world_to_cam;
  return m * cov3d * m.transpose();
}

std::optional<Splat2D> project_covariance(const LabeledGaussian& g, std::size_t source_index,
                                          const Pose& pose, const CameraIntrinsics& intrinsics,
                                          const RenderSettings& settings) {
  const Eigen::Vector3f cam = pose.apply(g.position);
  if (!(cam.z() > settings.near_plane)) return std::nullopt;  // culled (NaN also lands here)

  Splat2D splat;
  splat.source_index = source_index;
  splat.depth = cam.z();
  splat.mean2d = {intrinsics.fx * cam.x() / cam.z() + intrinsics.cx,
                  intrinsics.fy * cam.y() / cam.z() + intrinsics.cy};
  const Eigen::Matrix2f raw = project_covariance_raw(
      g.covariance(), pose.rotation.toRotationMatrix(), projection_jacobian(intrinsics, cam));
  splat.cov2d = raw + Eigen::Matrix2f::Identity() * settings.cov2d_regularizer;

  if (!splat.mean2d.allFinite() || !splat.cov2d.allFinite()) {
    throw std::runtime_error("project_covariance: non-finite projection for gaussian " +
                             std::to_string(source_index));
  }
  return splat;
}

float evaluate_alpha(const Splat2D& splat, float opacity, const Eigen::Vector2f& pixel,
                     const RenderSettings& settings) {
  const Conic conic = conic_from_cov(splat.cov2d);
  return alpha_from_conic(conic, opacity, pixel.x() - splat.mean2d.x(),
                          pixel.y() - splat.mean2d.y(), settings);
}

Eigen::Vector2f splat_extent(const Splat2D& splat, float opacity, const RenderSettings& settings) {
  if (!(opacity > settings.alpha_cutoff)) return Eigen::Vector2f::Zero();
  // alpha >= cutoff implies mahalanobis^2 <= 2 ln(opacity/cutoff); the
  // per-axis marginal bounds that region, so pixels outside the box cannot
  // pass the cutoff. This keeps the tiled pass exactly equal to a
  // per-pixel evaluation of every splat.
  const float mahal2 = 2.0f * std::log(opacity / settings.alpha_cutoff);
  return {std::sqrt(mahal2 * splat.cov2d(0, 0)), std::sqrt(mahal2 * splat.cov2d(1, 1))};
}

FrameRender rasterize(const GaussianScene& scene, const Pose& pose,
                      const CameraIntrinsics& intrinsics, const RenderSettings& settings) {
  if (!intrinsics.valid()) throw std::invalid_argument("rasterize: invalid intrinsics");
  const int width = intrinsics.width;
  const int height = intrinsics.height;

  FrameRender out;
  out.rgb = RgbImage(width, height);
  out.depth = ScalarGrid::Zero(height, width);
  out.transmittance = ScalarGrid::Ones(height, width);

  std::vector<PreparedSplat> splats;
  splats.reserve(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const LabeledGaussian& g = scene.gaussian(i);
    const auto projected = project_covariance(g, i, pose, intrinsics, settings);
    if (!projected) continue;
    const Eigen::Vector2f extent = splat_extent(*projected, g.opacity, settings);
    if (extent.x() <= 0.0f || extent.y() <= 0.0f) continue;

    PreparedSplat s;
    s.mean = projected->mean2d;
    // One pixel of slack keeps the bound conservative under float rounding.
    s.x0 = std::max(0, static_cast<int>(std::floor(s.mean.x() - extent.x() - 1.0f)));
    s.y0 = std::max(0, static_cast<int>(std::floor(s.mean.y() - extent.y() - 1.0f)));
    s.x1 = std::min(width - 1, static_cast<int>(std::ceil(s.mean.x() + extent.x() + 1.0f)));
    s.y1 = std::min(height - 1, static_cast<int>(std::ceil(s.mean.y() + extent.y() + 1.0f)));
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    s.conic = conic_from_cov(projected->cov2d);
    s.depth = projected->depth;
    s.opacity = g.opacity;
    s.color = g.color;
    s.label = g.label;
    s.source_index = static_cast<std::uint32_t>(i);
    splats.push_back(s);
  }

  // Global front-to-back order; ties broken by gaussian index for
  // storage-order independence.
  std::sort(splats.begin(), splats.end(), [](const PreparedSplat& a, const PreparedSplat& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.source_index < b.source_index;
  });

  const int tile = std::max(1, settings.tile_size);
  const int tiles_x = (width + tile - 1) / tile;
  const int tiles_y = (height + tile - 1) / tile;
  const int n_tiles = tiles_x * tiles_y;

  std::vector<std::vector<std::uint32_t>> bins(n_tiles);
  for (std::uint32_t si = 0; si < splats.size(); ++si) {
    const PreparedSplat& s = splats[si];
    for (int ty = s.y0 / tile; ty <= s.y1 / tile; ++ty) {
      for (int tx = s.x0 / tile; tx <= s.x1 / tile; ++tx) {
        bins[ty * tiles_x + tx].push_back(si);
      }
    }
  }

  const bool record = settings.record_contributors;
  std::vector<TileResult> tile_results(record ? n_tiles : 0);

  auto process_tile = [&](int tile_index, RecordScratch& scratch) {
    const int tx = tile_index % tiles_x;
    const int ty = tile_index / tiles_x;
    const int px0 = tx * tile;
    const int py0 = ty * tile;
    const int px1 = std::min(width, px0 + tile);
    const int py1 = std::min(height, py0 + tile);
    const int tw = px1 - px0;
    const int th = py1 - py0;
    const int n_px = tw * th;

    std::vector<float> acc_r(n_px, 0.0f), acc_g(n_px, 0.0f), acc_b(n_px, 0.0f);
    std::vector<float> acc_d(n_px, 0.0f), trans(n_px, 1.0f);
    std::vector<std::uint8_t> done(n_px, 0);
    int active = n_px;

    // With fewer binned splats than the per-pixel cap no pixel can overflow,
    // so the eviction bookkeeping is unreachable and a flat hit log suffices.
    const bool fast = record && static_cast<int>(bins[tile_index].size()) <=
                                    settings.max_contributors_per_pixel;
    if (record) {
      if (fast) {
        scratch.hits.clear();
      } else {
        if (scratch.lists.size() < static_cast<std::size_t>(n_px)) scratch.lists.resize(n_px);
        for (int i = 0; i < n_px; ++i) scratch.lists[i].clear();
      }
    }

    for (const std::uint32_t si : bins[tile_index]) {
      if (active == 0) break;
      const PreparedSplat& s = splats[si];
      const int ya = std::max(s.y0, py0), yb = std::min(s.y1, py1 - 1);
      const int xa = std::max(s.x0, px0), xb = std::min(s.x1, px1 - 1);
      for (int py = ya; py <= yb; ++py) {
        for (int px = xa; px <= xb; ++px) {
          const int local = (py - py0) * tw + (px - px0);
          if (done[local]) continue;
          const float alpha =
              alpha_from_conic(s.conic, s.opacity, static_cast<float>(px) + 0.5f - s.mean.x(),
                               static_cast<float>(py) + 0.5f - s.mean.y(), settings);
          if (alpha == 0.0f) continue;
          const float weight = alpha * trans[local];
          acc_r[local] += weight * s.color.x();
          acc_g[local] += weight * s.color.y();
          acc_b[local] += weight * s.color.z();
          acc_d[local] += weight * s.depth;
          if (record) {
            auto& list = scratch[local];
            bool keep = true;
            if (static_cast<int>(list.size()) >= settings.max_contributors_per_pixel) {
              auto min_it = std::min_element(
                  list.begin(), list.end(),
                  [](const PixelContributor& a, const PixelContributor& b) {
                    return a.weight < b.weight;
                  });
              if (min_it->weight < weight) {
                list.erase(min_it);  // drop the lowest-weight record, keep depth order
              } else {
                keep = false;
              }
            }
            if (keep) {
              list.push_back({s.source_index, s.label, alpha, s.depth, weight, s.color});
            }
          }
          trans[local] *= 1.0f - alpha;
          if (trans[local] < settings.min_transmittance) {
            done[local] = 1;
            --active;
          }
        }
      }
    }

    for (int py = py0; py < py1; ++py) {
      for (int px = px0; px < px1; ++px) {
        const int local = (py - py0) * tw + (px - px0);
        out.rgb.r(py, px) = acc_r[local];
        out.rgb.g(py, px) = acc_g[local];
        out.rgb.b(py, px) = acc_b[local];
        out.depth(py, px) = acc_d[local];
        out.transmittance(py, px) = trans[local];
      }
    }

    if (record) {
      TileResult& result = tile_results[tile_index];
      result.counts.resize(n_px);
      std::size_t total = 0;
      for (int i = 0; i < n_px; ++i) {
        result.counts[i] = static_cast<std::uint32_t>(scratch[i].size());
        total += scratch[i].size();
      }
      result.entries.reserve(total);
      for (int i = 0; i < n_px; ++i) {
        result.entries.insert(result.entries.end(), scratch[i].begin(), scratch[i].end());
      }
    }
  };

  int n_threads = settings.threads;
  if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp(n_threads, 1, n_tiles);

  if (n_threads == 1) {
    std::vector<std::vector<PixelContributor>> scratch;
    for (int t = 0; t < n_tiles; ++t) process_tile(t, scratch);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        std::vector<std::vector<PixelContributor>> scratch;
        for (int t = next.fetch_add(1); t < n_tiles; t = next.fetch_add(1)) {
          process_tile(t, scratch);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  if (record) {
    ContributorImage& ci = out.contributors;
    ci.width = width;
    ci.height = height;
    ci.offsets.assign(static_cast<std::size_t>(width) * height + 1, 0);
    for (int py = 0; py < height; ++py) {
      const int ty = py / tile;
      for (int px = 0; px < width; ++px) {
        const int tx = px / tile;
        const TileResult& result = tile_results[ty * tiles_x + tx];
        const int tw = std::min(width, (tx + 1) * tile) - tx * tile;
        const int local = (py - ty * tile) * tw + (px - tx * tile);
        ci.offsets[static_cast<std::size_t>(py) * width + px + 1] = result.counts[local];
      }
    }
    std::partial_sum(ci.offsets.begin(), ci.offsets.end(), ci.offsets.begin());
    ci.entries.resize(ci.offsets.back());
    // Per-tile entries are local pixel-major; scatter them to global order.
    for (int t = 0; t < n_tiles; ++t) {
      const TileResult& result = tile_results[t];
      const int tx = t % tiles_x;
      const int ty = t / tiles_x;
      const int px0 = tx * tile;
      const int py0 = ty * tile;
      const int tw = std::min(width, px0 + tile) - px0;
      std::size_t src = 0;
      for (std::size_t local = 0; local < result.counts.size(); ++local) {
        const int px = px0 + static_cast<int>(local) % tw;
        const int py = py0 + static_cast<int>(local) / tw;
        const std::size_t dst = ci.offsets[static_cast<std::size_t>(py) * width + px];
        std::copy_n(result.entries.begin() + src, result.counts[local], ci.entries.begin() + dst);
        src += result.counts[local];
      }
    }
  }

  return out;
}

}  // namespace ogs
