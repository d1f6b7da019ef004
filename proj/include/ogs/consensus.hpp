#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "ogs/scene.hpp"
#include "ogs/types.hpp"
#include "ogs/voting.hpp"

namespace ogs {

struct InputSegmentation {
  LabelMap label_map;
  std::map<std::uint32_t, float> confidences;  // per nonzero label
  LabelClassTable table;
};

struct OverlapStats {
  std::map<std::uint32_t, std::size_t> input_area;
  std::map<std::uint32_t, std::size_t> rendered_area;
  // input label -> rendered label -> co-occurring pixel count (nonzero labels only)
  std::map<std::uint32_t, std::map<std::uint32_t, std::size_t>> intersections;
};

enum class MatchKind { FullMatch, PartOf, WholeOf, New, Background };

struct MatchEntry {
  MatchKind kind = MatchKind::Background;
  std::uint32_t rendered_label = 0;            // FullMatch / PartOf counterpart
  std::vector<std::uint32_t> rendered_parts;   // WholeOf constituents
};

struct MatchClassification {
  std::map<std::uint32_t, MatchEntry> by_input_label;
};

struct ConsensusThresholds {
  float tau1 = 0.85f;  // mutual-overlap bound for a full match
  float tau2 = 0.9f;   // containment bound for part/whole relationships
  float tau3 = 0.1f;   // overlap floor below which a label is new
};

struct ConsensusOutcome {
  std::map<std::uint32_t, std::uint32_t> mapping;  // input label -> target label
  LabelMap consistent_map;
  std::vector<TopkRelabelCommand> relabel_commands;
  std::map<std::uint32_t, float> confidence_updates;  // registry confidences set
  std::vector<std::uint32_t> new_labels;
  std::vector<std::uint32_t> decayed_scene_labels;
  std::vector<std::uint32_t> decayed_input_labels;
  // Part groups that out-arbitrated the rendered label and broke it up:
  // (rendered label, input parts that received fresh labels).
  std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> part_overrides;
  // Scene part labels absorbed into a merge target, with Gaussians moved.
  std::map<std::uint32_t, std::uint32_t> merged_labels;
  std::size_t merged_gaussians = 0;
};

// Rescales per-label confidences by the mean coverage ratio over each
// label's support; the map and class table pass through unchanged.
InputSegmentation update_input_confidence(const InputSegmentation& input,
                                          const ScalarGrid& cov_r);

OverlapStats overlap_stats(const LabelMap& input_map, const LabelMap& rendered_map);

// Assigns each nonzero input label exactly one relationship. Full matches
// are resolved first, greedily by descending intersection, one-to-one.
MatchClassification classify_matches(const OverlapStats& stats,
                                     const ConsensusThresholds& thresholds = {});

float area_weighted_confidence(
    std::span<const std::pair<float, std::size_t>> parts);

// Arbitrates every classified input label against the scene registry:
// applies the full-match max rule, decides part/whole winners by
// area-weighted confidence, allocates labels for new segments, and emits
// the label mapping, relabel commands, and decay marks. Decays themselves
// are applied separately via apply_part_decay.
ConsensusOutcome resolve_consensus(const InputSegmentation& input, const LabelMap& rendered,
                                   const OverlapStats& stats,
                                   const MatchClassification& classification,
                                   GaussianScene& scene);

inline constexpr float kDefaultPartDecay = 0.06f;

// Registry-side decay; unknown labels are skipped, count returned.
std::size_t apply_part_decay(GaussianScene& scene, std::span<const std::uint32_t> decayed,
                             float delta = kDefaultPartDecay);

// Input-side decay over a plain confidence association.
std::map<std::uint32_t, float> apply_part_decay(std::map<std::uint32_t, float> confidences,
                                                std::span<const std::uint32_t> decayed,
                                                float delta = kDefaultPartDecay);

// Folds an input class table into the global one through the label mapping;
// the higher-scoring entry wins and "None"/0.0 never displaces a named class.
LabelClassTable merge_tables(const LabelClassTable& global_table, const LabelClassTable& input,
                             const std::map<std::uint32_t, std::uint32_t>& mapping);

}  // namespace ogs
