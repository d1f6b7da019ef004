#include "ogs/consensus.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ogs {

namespace {

float input_confidence(const InputSegmentation& input, std::uint32_t label) {
  const auto it = input.confidences.find(label);
  if (it == input.confidences.end()) {
    throw std::runtime_error("consensus: no confidence entry for input label " +
                             std::to_string(label));
  }
  return it->second;
}

float registry_confidence(const GaussianScene& scene, std::uint32_t label) {
  const SegmentRecord* record = scene.find_record(label);
  if (record == nullptr) {
    throw std::runtime_error("consensus: no registry record for rendered label " +
                             std::to_string(label));
  }
  return record->confidence;
}

std::size_t area_of(const std::map<std::uint32_t, std::size_t>& areas, std::uint32_t label) {
  const auto it = areas.find(label);
  if (it == areas.end()) {
    throw std::runtime_error("consensus: no area recorded for label " + std::to_string(label));
  }
  return it->second;
}

}  // namespace

InputSegmentation update_input_confidence(const InputSegmentation& input,
                                          const ScalarGrid& cov_r) {
  const LabelGrid& labels = input.label_map.labels;
  if (cov_r.rows() != labels.rows() || cov_r.cols() != labels.cols()) {
    throw std::invalid_argument("update_input_confidence: dimension mismatch");
  }
  std::map<std::uint32_t, double> sums;
  std::map<std::uint32_t, std::size_t> counts;
  for (int y = 0; y < labels.rows(); ++y) {
    for (int x = 0; x < labels.cols(); ++x) {
      const std::uint32_t label = labels(y, x);
      if (label == kBackgroundLabel) continue;
      sums[label] += static_cast<double>(cov_r(y, x)) * input_confidence(input, label);
      ++counts[label];
    }
  }
  InputSegmentation out = input;
  for (const auto& [label, sum] : sums) {
    out.confidences[label] = static_cast<float>(sum / static_cast<double>(counts[label]));
  }
  return out;
}

OverlapStats overlap_stats(const LabelMap& input_map, const LabelMap& rendered_map) {
  if (!input_map.same_size(rendered_map)) {
    throw std::invalid_argument("overlap_stats: dimension mismatch");
  }
  OverlapStats stats;
  for (int y = 0; y < input_map.height(); ++y) {
    for (int x = 0; x < input_map.width(); ++x) {
      const std::uint32_t ls = input_map.labels(y, x);
      const std::uint32_t lr = rendered_map.labels(y, x);
      if (ls != kBackgroundLabel) ++stats.input_area[ls];
      if (lr != kBackgroundLabel) ++stats.rendered_area[lr];
      if (ls != kBackgroundLabel && lr != kBackgroundLabel) ++stats.intersections[ls][lr];
    }
  }
  return stats;
}

MatchClassification classify_matches(const OverlapStats& stats,
                                     const ConsensusThresholds& thresholds) {
  MatchClassification result;

  struct Candidate {
    std::uint32_t ls, lr;
    std::size_t intersection;
  };
  std::vector<Candidate> candidates;
  for (const auto& [ls, row] : stats.intersections) {
    for (const auto& [lr, count] : row) candidates.push_back({ls, lr, count});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.intersection != b.intersection) return a.intersection > b.intersection;
    if (a.ls != b.ls) return a.ls < b.ls;
    return a.lr < b.lr;
  });

  std::map<std::uint32_t, bool> rendered_claimed;
  for (const Candidate& c : candidates) {
    if (result.by_input_label.count(c.ls) || rendered_claimed[c.lr]) continue;
    const double rs = static_cast<double>(c.intersection) / area_of(stats.input_area, c.ls);
    const double rr = static_cast<double>(c.intersection) / area_of(stats.rendered_area, c.lr);
    if (rs >= thresholds.tau1 && rr >= thresholds.tau1) {
      result.by_input_label[c.ls] = {MatchKind::FullMatch, c.lr, {}};
      rendered_claimed[c.lr] = true;
    }
  }

  for (const auto& [ls, area_s] : stats.input_area) {
    if (result.by_input_label.count(ls)) continue;

    std::uint32_t best_lr = 0;
    std::size_t best_intersection = 0;
    const auto row_it = stats.intersections.find(ls);
    if (row_it != stats.intersections.end()) {
      for (const auto& [lr, count] : row_it->second) {
        if (count > best_intersection) {
          best_intersection = count;
          best_lr = lr;
        }
      }
    }

    if (best_intersection > 0) {
      const double rs = static_cast<double>(best_intersection) / area_s;
      const double rr =
          static_cast<double>(best_intersection) / area_of(stats.rendered_area, best_lr);
      if (rs >= thresholds.tau2 && rr < thresholds.tau1) {
        result.by_input_label[ls] = {MatchKind::PartOf, best_lr, {}};
        continue;
      }
    }

    // Any rendered label sitting almost entirely inside this input label is a
    // part of it, even when the parts jointly cover only a sliver of the input
    // support. Requiring joint coverage here would strand half-mapped objects:
    // the leftover stub fails every other branch, falls to background, and the
    // unlabeled fill can never out-vote it.
    std::vector<std::uint32_t> parts;
    if (row_it != stats.intersections.end()) {
      for (const auto& [lr, count] : row_it->second) {
        if (static_cast<double>(count) >=
            thresholds.tau2 * static_cast<double>(area_of(stats.rendered_area, lr))) {
          parts.push_back(lr);
        }
      }
    }
    if (!parts.empty()) {
      result.by_input_label[ls] = {MatchKind::WholeOf, 0, std::move(parts)};
      continue;
    }

    const double rs_max = static_cast<double>(best_intersection) / area_s;
    if (rs_max < thresholds.tau3) {
      result.by_input_label[ls] = {MatchKind::New, 0, {}};
    } else {
      result.by_input_label[ls] = {MatchKind::Background, 0, {}};
    }
  }

  return result;
}

float area_weighted_confidence(std::span<const std::pair<float, std::size_t>> parts) {
  if (parts.empty()) {
    throw std::invalid_argument("area_weighted_confidence: empty part list");
  }
  double num = 0.0, den = 0.0;
  for (const auto& [confidence, area] : parts) {
    num += static_cast<double>(confidence) * static_cast<double>(area);
    den += static_cast<double>(area);
  }
  if (den <= 0.0) {
    throw std::invalid_argument("area_weighted_confidence: zero total area");
  }
  return static_cast<float>(num / den);
}

ConsensusOutcome resolve_consensus(const InputSegmentation& input, const LabelMap& rendered,
                                   const OverlapStats& stats,
                                   const MatchClassification& classification,
                                   GaussianScene& scene) {
  ConsensusOutcome out;
  if (!input.label_map.same_size(rendered)) {
    throw std::invalid_argument("resolve_consensus: input/rendered size mismatch");
  }
  const LabelGrid& in_labels = input.label_map.labels;

  auto emit_commands_over_input_support = [&](std::uint32_t part, std::uint32_t from,
                                              std::uint32_t to) {
    for (int y = 0; y < in_labels.rows(); ++y) {
      for (int x = 0; x < in_labels.cols(); ++x) {
        if (in_labels(y, x) == part) out.relabel_commands.push_back({{x, y}, from, to});
      }
    }
  };

  for (const auto& [ls, entry] : classification.by_input_label) {
    if (entry.kind != MatchKind::FullMatch) continue;
    const std::uint32_t lr = entry.rendered_label;
    const float merged = std::max(registry_confidence(scene, lr), input_confidence(input, ls));
    scene.set_confidence(lr, merged);
    out.confidence_updates[lr] = merged;
    out.mapping[ls] = lr;
  }

  std::map<std::uint32_t, std::vector<std::uint32_t>> part_groups;  // rendered -> input parts
  for (const auto& [ls, entry] : classification.by_input_label) {
    if (entry.kind == MatchKind::PartOf) part_groups[entry.rendered_label].push_back(ls);
  }
  for (const auto& [lr, group] : part_groups) {
    std::vector<std::pair<float, std::size_t>> weighted;
    weighted.reserve(group.size());
    for (const std::uint32_t part : group) {
      weighted.emplace_back(input_confidence(input, part), area_of(stats.input_area, part));
    }
    const float mean_input = area_weighted_confidence(weighted);
    const float scene_conf = registry_confidence(scene, lr);
    if (scene_conf > mean_input) {
      for (const std::uint32_t part : group) {
        out.mapping[part] = lr;
        out.decayed_input_labels.push_back(part);
      }
    } else {
      std::vector<std::uint32_t> promoted;
      for (const std::uint32_t part : group) {
        const float part_conf = input_confidence(input, part);
        if (part_conf > scene_conf) {
          const std::uint32_t fresh = scene.allocate_label(part_conf);
          out.mapping[part] = fresh;
          out.new_labels.push_back(fresh);
          emit_commands_over_input_support(part, lr, fresh);
          promoted.push_back(part);
        } else {
          out.mapping[part] = lr;
        }
      }
      if (!promoted.empty()) out.part_overrides.emplace_back(lr, std::move(promoted));
    }
  }

  for (const auto& [ls, entry] : classification.by_input_label) {
    if (entry.kind != MatchKind::WholeOf) continue;
    const auto& parts = entry.rendered_parts;
    std::vector<std::pair<float, std::size_t>> weighted;
    weighted.reserve(parts.size());
    for (const std::uint32_t part : parts) {
      weighted.emplace_back(registry_confidence(scene, part), area_of(stats.rendered_area, part));
    }
    const float mean_rendered = area_weighted_confidence(weighted);
    const float whole_conf = input_confidence(input, ls);

    if (whole_conf > mean_rendered) {
      std::uint32_t target = parts.front();
      for (const std::uint32_t part : parts) {
        if (area_of(stats.rendered_area, part) > area_of(stats.rendered_area, target)) {
          target = part;
        }
      }
      out.mapping[ls] = target;
      // The target now stands for the whole object, not a part of one: no
      // decay, and without the confidence handover it would keep its decayed
      // part-confidence and be re-split by the next noisy part observation.
      const float merged = std::max(registry_confidence(scene, target), whole_conf);
      scene.set_confidence(target, merged);
      out.confidence_updates[target] = merged;
      for (const std::uint32_t part : parts) {
        if (part == target) continue;
        // Absorb the losing parts outright. Relabeling only the Gaussians
        // visible this frame leaves the far side of the object carrying the
        // dead label, which then resurfaces from every other viewpoint.
        out.merged_gaussians += scene.merge_label(part, target);
        out.merged_labels[part] = target;
      }
    } else {
      const auto& row = stats.intersections.at(ls);
      std::uint32_t dominant = parts.front();
      std::size_t dominant_overlap = 0;
      for (const std::uint32_t part : parts) {
        // The parts were observed as fragments of one object; decay them even
        // when they win, or a confidence ratchet keeps the split forever.
        out.decayed_scene_labels.push_back(part);
        const auto it = row.find(part);
        const std::size_t overlap = it == row.end() ? 0 : it->second;
        if (overlap > dominant_overlap) {
          dominant_overlap = overlap;
          dominant = part;
        }
      }
      out.mapping[ls] = dominant;
      out.decayed_input_labels.push_back(ls);
    }
  }

  for (const auto& [ls, entry] : classification.by_input_label) {
    if (entry.kind == MatchKind::New) {
      const std::uint32_t fresh = scene.allocate_label(input_confidence(input, ls));
      out.mapping[ls] = fresh;
      out.new_labels.push_back(fresh);
    } else if (entry.kind == MatchKind::Background) {
      out.mapping[ls] = kBackgroundLabel;
    }
  }

  out.consistent_map.labels = LabelGrid::Zero(in_labels.rows(), in_labels.cols());
  for (int y = 0; y < in_labels.rows(); ++y) {
    for (int x = 0; x < in_labels.cols(); ++x) {
      const std::uint32_t ls = in_labels(y, x);
      if (ls == kBackgroundLabel) continue;
      const auto it = out.mapping.find(ls);
      if (it == out.mapping.end()) {
        throw std::runtime_error("resolve_consensus: unclassified input label " +
                                 std::to_string(ls));
      }
      out.consistent_map.labels(y, x) = it->second;
    }
  }
  return out;
}

std::size_t apply_part_decay(GaussianScene& scene, std::span<const std::uint32_t> decayed,
                             float delta) {
  if (delta < 0.0f || delta > 1.0f) {
    throw std::invalid_argument("apply_part_decay: delta outside [0,1]");
  }
  std::size_t skipped = 0;
  for (const std::uint32_t label : decayed) {
    if (!scene.decay_label(label, delta)) ++skipped;
  }
  return skipped;
}

std::map<std::uint32_t, float> apply_part_decay(std::map<std::uint32_t, float> confidences,
                                                std::span<const std::uint32_t> decayed,
                                                float delta) {
  if (delta < 0.0f || delta > 1.0f) {
    throw std::invalid_argument("apply_part_decay: delta outside [0,1]");
  }
  for (const std::uint32_t label : decayed) {
    const auto it = confidences.find(label);
    if (it != confidences.end()) it->second = std::max(0.0f, it->second - delta);
  }
  return confidences;
}

LabelClassTable merge_tables(const LabelClassTable& global_table, const LabelClassTable& input,
                             const std::map<std::uint32_t, std::uint32_t>& mapping) {
  LabelClassTable out = global_table;
  for (const auto& [ls, entry] : input.entries) {
    const auto map_it = mapping.find(ls);
    if (map_it == mapping.end()) {
      throw std::invalid_argument("merge_tables: mapping missing input label " +
                                  std::to_string(ls));
    }
    const std::uint32_t target = map_it->second;
    if (target == kBackgroundLabel) continue;
    const auto existing = out.entries.find(target);
    if (existing == out.entries.end()) {
      out.entries[target] = entry;
      continue;
    }
    const bool incoming_named = entry.class_name != "None";
    const bool existing_named = existing->second.class_name != "None";
    if (!incoming_named) continue;
    if (!existing_named || entry.score > existing->second.score) {
      existing->second = entry;
    }
  }
  return out;
}

}  // namespace ogs
