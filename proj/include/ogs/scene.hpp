#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ogs/gaussian.hpp"

namespace ogs {

/// Per-label bookkeeping kept in the scene's label registry.
struct SegmentRecord {
  float confidence = 0.0f;  // [0, 1]
  std::size_t gaussian_count = 0;
  // Decay chain: confidence = max(0, decay_base - part_decay_applied * delta).
  // Any explicit confidence write restarts the chain.
  float decay_base = 0.0f;
  std::uint32_t part_decay_applied = 0;
};

struct ClassEntry {
  std::string class_name = "None";
  float score = 0.0f;
};

/// Association from instance label to open-set class name + detection score.
/// Labels without a matched detection carry ("None", 0.0).
struct LabelClassTable {
  std::map<std::uint32_t, ClassEntry> entries;

  const ClassEntry* find(std::uint32_t label) const {
    auto it = entries.find(label);
    return it == entries.end() ? nullptr : &it->second;
  }
};

inline constexpr std::uint32_t kDefaultMaxLabels = 2000;

/// Labeled Gaussian scene: the splat soup, the label registry (confidence +
/// cached census) and the global label-class table. Single writer; renderers
/// read an immutable snapshot between edits. Label ids are never recycled.
class GaussianScene {
 public:
  explicit GaussianScene(std::uint32_t max_labels = kDefaultMaxLabels) : max_labels_(max_labels) {}

  const std::vector<LabeledGaussian>& gaussians() const { return gaussians_; }
  std::size_t size() const { return gaussians_.size(); }
  const LabeledGaussian& gaussian(std::size_t i) const { return gaussians_[i]; }

  const std::map<std::uint32_t, SegmentRecord>& label_registry() const { return registry_; }
  const SegmentRecord* find_record(std::uint32_t label) const;

  LabelClassTable& global_table() { return table_; }
  const LabelClassTable& global_table() const { return table_; }

  std::uint32_t next_label() const { return next_label_; }
  std::uint32_t max_labels() const { return max_labels_; }

  /// Appends a batch after validating every element; on any invariant
  /// violation the whole batch is rejected and the scene is unchanged.
  /// Unknown labels get a SegmentRecord with confidence 0.
  void add_gaussians(std::span<const LabeledGaussian> batch);

  /// Moves exactly the listed Gaussians to `target` (registered on demand).
  /// Out-of-range indices throw before anything is applied. Returns the
  /// number of Gaussians whose label actually changed.
  std::size_t relabel(std::span<const std::size_t> ids, std::uint32_t target);

  /// Removes every Gaussian carrying `target` along with its registry and
  /// table entries. Returns false (no-op warning) for an unknown label;
  /// throws for the background label.
  bool remove_label(std::uint32_t target);

  /// Absorbs `from` into `to`: every Gaussian carrying `from` (visible or
  /// not) is relabeled, and `from` loses its registry and table entries.
  /// Throws for background labels or an unregistered `to`; an unknown `from`
  /// is a no-op. Returns the number of Gaussians moved.
  std::size_t merge_label(std::uint32_t from, std::uint32_t to);

  /// Removes the listed Gaussians (pruning support). Indices refer to the
  /// pre-removal layout; registry counts are updated, zero-count labels stay
  /// registered. Returns the number removed.
  std::size_t remove_gaussians(std::span<const std::size_t> ids);

  /// Exact per-label counts over the current Gaussians (label 0 included
  /// when present); registered labels with zero Gaussians are omitted.
  std::map<std::uint32_t, std::size_t> label_census() const;

  /// Fresh label from the monotone counter. Throws when the registry would
  /// exceed max_labels.
  std::uint32_t allocate_label(float confidence);

  /// Registers `label` (confidence used only when new) and keeps next_label
  /// strictly above it.
  void register_label(std::uint32_t label, float confidence);

  void set_confidence(std::uint32_t label, float confidence);

  /// Applies one part-label decay step: confidence = max(0, c - delta).
  /// Returns false for an unknown label.
  bool decay_label(std::uint32_t label, float delta);

 private:
  void bump_next_label(std::uint32_t seen);

  std::vector<LabeledGaussian> gaussians_;
  std::map<std::uint32_t, SegmentRecord> registry_;
  LabelClassTable table_;
  std::uint32_t next_label_ = 1;
  std::uint32_t max_labels_;
};

}  // namespace ogs
