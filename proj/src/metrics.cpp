#include "ogs/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

namespace ogs {

namespace {

struct PairCount {
  std::uint32_t pred, gt;
  std::size_t count;
};

struct OverlapTables {
  std::map<std::uint32_t, std::size_t> pred_area;
  std::map<std::uint32_t, std::size_t> gt_area;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> intersections;
};

OverlapTables tabulate(const LabelMap& pred, const LabelMap& gt) {
  if (!pred.same_size(gt)) throw std::invalid_argument("compute_miou_acc: dimension mismatch");
  OverlapTables t;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const std::uint32_t p = pred.labels(y, x);
      const std::uint32_t g = gt.labels(y, x);
      if (p != kBackgroundLabel) ++t.pred_area[p];
      if (g != kBackgroundLabel) ++t.gt_area[g];
      if (p != kBackgroundLabel && g != kBackgroundLabel) ++t.intersections[{p, g}];
    }
  }
  return t;
}

std::map<std::uint32_t, std::uint32_t> greedy_match(const OverlapTables& t) {
  std::vector<PairCount> pairs;
  pairs.reserve(t.intersections.size());
  for (const auto& [key, count] : t.intersections) pairs.push_back({key.first, key.second, count});
  std::sort(pairs.begin(), pairs.end(), [](const PairCount& a, const PairCount& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.gt != b.gt) return a.gt < b.gt;
    return a.pred < b.pred;
  });
  std::map<std::uint32_t, std::uint32_t> matching;
  std::set<std::uint32_t> gt_claimed;
  for (const PairCount& p : pairs) {
    if (matching.count(p.pred) || gt_claimed.count(p.gt)) continue;
    matching[p.pred] = p.gt;
    gt_claimed.insert(p.gt);
  }
  return matching;
}

}  // namespace

std::map<std::uint32_t, std::uint32_t> match_labels(const LabelMap& pred, const LabelMap& gt) {
  return greedy_match(tabulate(pred, gt));
}

SegmentationScore compute_miou_acc(const LabelMap& pred, const LabelMap& gt) {
  const OverlapTables t = tabulate(pred, gt);
  const auto matching = greedy_match(t);

  std::map<std::uint32_t, std::uint32_t> gt_to_pred;
  for (const auto& [p, g] : matching) gt_to_pred[g] = p;

  SegmentationScore score;
  if (t.gt_area.empty()) {
    score.miou = 1.0f;
  } else {
    double iou_sum = 0.0;
    for (const auto& [g, g_area] : t.gt_area) {
      const auto it = gt_to_pred.find(g);
      if (it == gt_to_pred.end()) continue;  // unmatched: IoU 0
      const std::uint32_t p = it->second;
      const auto inter_it = t.intersections.find({p, g});
      const std::size_t inter = inter_it == t.intersections.end() ? 0 : inter_it->second;
      const std::size_t uni = g_area + t.pred_area.at(p) - inter;
      if (uni > 0) iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
    }
    score.miou = static_cast<float>(iou_sum / static_cast<double>(t.gt_area.size()));
  }

  std::size_t correct = 0;
  const std::size_t total = static_cast<std::size_t>(pred.width()) * pred.height();
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const std::uint32_t p = pred.labels(y, x);
      const std::uint32_t g = gt.labels(y, x);
      std::uint32_t translated = kBackgroundLabel;
      if (p != kBackgroundLabel) {
        const auto it = matching.find(p);
        translated = it == matching.end() ? UINT32_MAX : it->second;
      }
      if (translated == g) ++correct;
    }
  }
  score.acc = total == 0 ? 1.0f : static_cast<float>(static_cast<double>(correct) / total);
  return score;
}

}  // namespace ogs
