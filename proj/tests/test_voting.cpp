#include <map>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "doctest.h"
#include "ogs/voting.hpp"

using namespace ogs;

namespace {

using Contribution = std::pair<std::uint32_t, float>;

// Builds a FrameRender by hand: one row of pixels, each given its contributor
// list and residual transmittance.
FrameRender handmade_frame(const std::vector<std::vector<PixelContributor>>& pixels,
                           const std::vector<float>& transmittance) {
  const int width = static_cast<int>(pixels.size());
  FrameRender frame;
  frame.rgb = RgbImage(width, 1);
  frame.depth = ScalarGrid::Zero(1, width);
  frame.transmittance = ScalarGrid::Ones(1, width);
  frame.contributors.width = width;
  frame.contributors.height = 1;
  frame.contributors.offsets.push_back(0);
  for (int x = 0; x < width; ++x) {
    frame.transmittance(0, x) = transmittance[x];
    for (const PixelContributor& c : pixels[x]) frame.contributors.entries.push_back(c);
    frame.contributors.offsets.push_back(
        static_cast<std::uint32_t>(frame.contributors.entries.size()));
  }
  return frame;
}

PixelContributor contributor(std::uint32_t index, std::uint32_t label, float weight,
                             float depth = 1.0f) {
  PixelContributor c;
  c.gaussian_index = index;
  c.label = label;
  c.alpha = weight;  // alpha only matters for compositing, not for voting
  c.depth = depth;
  c.weight = weight;
  return c;
}

}  // namespace

TEST_CASE("vote_pixel reproduces the front-to-back weight recurrence") {
  const std::vector<Contribution> contributions{{1, 0.5f}, {2, 0.4f}, {1, 0.3f}};
  const VoteResult result = vote_pixel(contributions);

  // w1 = 0.5, w2 = 0.4*0.5 = 0.2, w3 = 0.3*0.5*0.6 = 0.09
  float t = 1.0f;
  const float w1 = 0.5f * t;
  t *= 1.0f - 0.5f;
  const float w2 = 0.4f * t;
  t *= 1.0f - 0.4f;
  const float w3 = 0.3f * t;

  REQUIRE(result.tally.size() == 2);
  CHECK(result.tally.at(1) == w1 + w3);
  CHECK(result.tally.at(2) == w2);
  CHECK(result.tally.at(1) == doctest::Approx(0.59f).epsilon(1e-6));
  CHECK(result.tally.at(2) == doctest::Approx(0.20f).epsilon(1e-6));
  CHECK(result.winner == 1);
}

TEST_CASE("vote_pixel breaks exact ties toward the smaller label") {
  // (L2, 0.5) then (L1, 1.0): both cumulative weights are exactly 0.5.
  const std::vector<Contribution> contributions{{2, 0.5f}, {1, 1.0f}};
  const VoteResult result = vote_pixel(contributions);
  CHECK(result.tally.at(1) == 0.5f);
  CHECK(result.tally.at(2) == 0.5f);
  CHECK(result.winner == 1);
}

TEST_CASE("unlabeled mass is tallied but can never win") {
  const std::vector<Contribution> contributions{{0, 0.6f}, {4, 0.2f}};
  const VoteResult result = vote_pixel(contributions);
  CHECK(result.tally.at(0) == 0.6f);
  CHECK(result.tally.at(4) == 0.2f * (1.0f - 0.6f));
  CHECK(result.winner == 4);

  const std::vector<Contribution> only_unlabeled{{0, 0.9f}, {0, 0.5f}};
  CHECK(vote_pixel(only_unlabeled).winner == kBackgroundLabel);
  CHECK(vote_pixel({}).winner == kBackgroundLabel);
  CHECK(vote_pixel({}).tally.empty());
}

TEST_CASE("vote_pixel tallies conserve the compositing mass") {
  std::mt19937 rng(417);
  std::uniform_int_distribution<std::uint32_t> label(0, 4);
  std::uniform_real_distribution<float> alpha(0.01f, 0.95f);
  std::uniform_int_distribution<int> length(0, 20);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Contribution> contributions;
    const int n = length(rng);
    for (int i = 0; i < n; ++i) contributions.emplace_back(label(rng), alpha(rng));

    const VoteResult result = vote_pixel(contributions);
    double mass = 0.0;
    double residual = 1.0;
    for (const auto& [l, a] : contributions) residual *= 1.0 - static_cast<double>(a);
    for (const auto& [l, w] : result.tally) {
      CHECK(w >= 0.0f);
      mass += w;
    }
    CHECK(mass + residual == doctest::Approx(1.0).epsilon(1e-5));

    // The winner must hold the maximum nonzero-label tally (smaller label on
    // ties) and must never be the background label when alternatives exist.
    std::uint32_t expected = kBackgroundLabel;
    float best = -1.0f;
    for (const auto& [l, w] : result.tally) {
      if (l == kBackgroundLabel) continue;
      if (w > best || (w == best && l < expected)) {
        best = w;
        expected = l;
      }
    }
    CHECK(result.winner == expected);
  }
}

TEST_CASE("derive_label_render elects per pixel and applies the coverage gate") {
  const FrameRender frame = handmade_frame(
      {{contributor(5, 1, 0.6f, 1.0f), contributor(2, 2, 0.2f, 2.0f)},
       {contributor(7, 3, 0.3f)},
       {}},
      {0.2f, 0.7f, 1.0f});

  const LabelRender render = derive_label_render(frame);
  CHECK(render.label_map.at(0, 0) == 1);  // coverage 0.8, L1 outweighs L2
  CHECK(render.label_map.at(1, 0) == 0);  // coverage 0.3 < 0.5: background
  CHECK(render.label_map.at(2, 0) == 0);  // empty pixel

  // Tally rows are label-ascending; the gated pixel still records its tally.
  const auto tally0 = render.tally.at(0, 0);
  REQUIRE(tally0.size() == 2);
  CHECK(tally0[0].label == 1);
  CHECK(tally0[0].weight == 0.6f);
  CHECK(tally0[1].label == 2);
  CHECK(tally0[1].weight == 0.2f);
  REQUIRE(render.tally.at(1, 0).size() == 1);
  CHECK(render.tally.at(1, 0)[0].weight == 0.3f);

  CHECK(render.visible_gaussians == std::vector<std::uint32_t>{2, 5, 7});
  CHECK_THROWS_AS(derive_label_render(frame, 0), std::invalid_argument);
}

TEST_CASE("derive_label_render keeps the k highest weights, ties by index") {
  std::vector<PixelContributor> pile{contributor(9, 1, 0.1f, 1.0f),
                                     contributor(3, 2, 0.4f, 2.0f),
                                     contributor(4, 3, 0.4f, 3.0f),
                                     contributor(1, 4, 0.2f, 4.0f)};
  const FrameRender frame = handmade_frame({pile}, {0.0f});
  const LabelRender render = derive_label_render(frame, 3);
  const auto topk = render.topk.at(0, 0);
  REQUIRE(topk.size() == 3);
  CHECK(topk[0].gaussian_index == 3);  // weight 0.4, smaller index first
  CHECK(topk[1].gaussian_index == 4);
  CHECK(topk[2].gaussian_index == 1);  // weight 0.2
  CHECK(render.topk.k == 3);

  // Exact tie in the label tally resolves to the smaller label.
  const FrameRender tied =
      handmade_frame({{contributor(0, 2, 0.5f, 1.0f), contributor(1, 1, 0.5f, 2.0f)}}, {0.0f});
  CHECK(derive_label_render(tied).label_map.at(0, 0) == 1);
}

TEST_CASE("relabel_via_topk applies first-command-wins over recorded gaussians") {
  GaussianScene scene;
  std::vector<LabeledGaussian> batch;
  for (std::uint32_t label : {1u, 1u, 2u, 3u}) {
    LabeledGaussian g;
    g.scale = Eigen::Vector3f::Constant(0.05f);
    g.opacity = 0.5f;
    g.label = label;
    batch.push_back(g);
  }
  scene.add_gaussians(batch);

  TopKContributorMatrix topk;
  topk.width = 2;
  topk.height = 1;
  topk.k = 2;
  topk.entries = {{0, 1, 0.5f}, {2, 2, 0.3f}, {1, 1, 0.4f}, {3, 3, 0.2f}};
  topk.offsets = {0, 2, 4};

  const std::vector<TopkRelabelCommand> commands{
      {{0, 0}, 1, 7},  // gaussian 0 -> 7
      {{1, 0}, 1, 8},  // gaussian 1 -> 8
      {{0, 0}, 2, 7},  // gaussian 2 -> 7
      {{1, 0}, 9, 5},  // no label-9 entry at that pixel: unmatched
      {{0, 0}, 1, 9},  // gaussian 0 already pending: first command wins
      {{1, 0}, 3, 3},  // gaussian 3 already carries the target: excluded
  };
  const RelabelResult result = relabel_via_topk(scene, topk, commands);

  CHECK(result.relabeled == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(result.unmatched_updates == 1);
  CHECK(scene.gaussian(0).label == 7);
  CHECK(scene.gaussian(1).label == 8);
  CHECK(scene.gaussian(2).label == 7);
  CHECK(scene.gaussian(3).label == 3);
  CHECK(scene.label_census().at(7) == 2);

  const std::vector<TopkRelabelCommand> oob{{{5, 0}, 1, 2}};
  CHECK_THROWS_AS(relabel_via_topk(scene, topk, oob), std::out_of_range);
}

TEST_CASE("compute_completeness is the visible fraction per label") {
  GaussianScene scene;
  std::vector<LabeledGaussian> batch;
  for (std::uint32_t label : {1u, 1u, 1u, 2u, 0u}) {
    LabeledGaussian g;
    g.scale = Eigen::Vector3f::Constant(0.05f);
    g.opacity = 0.5f;
    g.label = label;
    batch.push_back(g);
  }
  scene.add_gaussians(batch);

  const std::vector<std::uint32_t> visible{0, 1, 3};
  const auto completeness = compute_completeness(scene, visible);
  REQUIRE(completeness.size() == 3);
  CHECK(completeness.at(0) == 0.0f);
  CHECK(completeness.at(1) == 2.0f / 3.0f);
  CHECK(completeness.at(2) == 1.0f);

  const std::vector<std::uint32_t> oob{99};
  CHECK_THROWS_AS(compute_completeness(scene, oob), std::out_of_range);
}

TEST_CASE("coverage_ratio_map reads completeness through the rendered labels") {
  LabelMap rendered(2, 2);
  rendered.at(0, 0) = 1;
  rendered.at(1, 0) = 0;
  rendered.at(0, 1) = 2;
  rendered.at(1, 1) = 1;
  const std::map<std::uint32_t, float> completeness{{1, 0.25f}, {2, 0.75f}};

  const ScalarGrid cov = coverage_ratio_map(rendered, completeness);
  CHECK(cov(0, 0) == 0.25f);
  CHECK(cov(0, 1) == 1.0f);  // background reads full coverage
  CHECK(cov(1, 0) == 0.75f);
  CHECK(cov(1, 1) == 0.25f);

  rendered.at(1, 0) = 3;  // no completeness entry
  CHECK_THROWS_AS(coverage_ratio_map(rendered, completeness), std::runtime_error);
}

TEST_CASE("render_label_map elects labels from a real rasterization") {
  CameraIntrinsics k;
  k.fx = k.fy = 20.0f;
  k.cx = k.cy = 8.5f;
  k.width = k.height = 16;

  GaussianScene scene;
  std::vector<LabeledGaussian> batch(2);
  batch[0].position = {0.0f, 0.0f, 2.0f};
  batch[0].scale = Eigen::Vector3f::Constant(0.1f);
  batch[0].opacity = 0.5f;
  batch[0].label = 1;
  batch[1].position = {0.0f, 0.0f, 4.0f};
  batch[1].scale = Eigen::Vector3f::Constant(0.1f);
  batch[1].opacity = 0.5f;
  batch[1].label = 2;
  scene.add_gaussians(batch);

  const LabelRenderResult result = render_label_map(scene, Pose{}, k);
  // Center pixel: weights 0.5 (L1) vs 0.25 (L2), coverage 0.75.
  CHECK(result.labels.label_map.at(8, 8) == 1);
  CHECK(result.labels.visible_gaussians == std::vector<std::uint32_t>{0, 1});
  CHECK(result.frame.transmittance(8, 8) == 0.25f);
}
