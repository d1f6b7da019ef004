#pragma once

#include <cstdint>
#include <map>

#include "ogs/types.hpp"

namespace ogs {

struct SegmentationScore {
  float miou = 0.0f;  // mean IoU over nonzero ground-truth labels
  float acc = 0.0f;   // pixel accuracy over all pixels
};

// Instance labels carry no shared id space, so predicted labels are first
// matched one-to-one to ground-truth labels greedily by descending
// intersection; unmatched ground-truth labels score zero IoU.
SegmentationScore compute_miou_acc(const LabelMap& pred, const LabelMap& gt);

// The matching used by compute_miou_acc, exposed for diagnostics:
// predicted label -> ground-truth label.
std::map<std::uint32_t, std::uint32_t> match_labels(const LabelMap& pred, const LabelMap& gt);

}  // namespace ogs
