#include "bevfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bevfuse {
namespace {

constexpr std::size_t kInterpolationPoints = 101;

// Indices of `dets` sorted by descending score; equal scores keep input order.
template <typename Pred>
std::vector<std::size_t> ranked(std::span<const Detection> dets, Pred keep) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep(dets[i])) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return idx;
}

double interpolated_ap(const std::vector<double>& precision, const std::vector<double>& recall) {
  // Running max from the right gives max precision at recall >= r.
  std::vector<double> envelope(precision.size());
  double best = 0.0;
  for (std::size_t i = precision.size(); i-- > 0;) {
    best = std::max(best, precision[i]);
    envelope[i] = best;
  }
  double sum = 0.0;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < kInterpolationPoints; ++k) {
    const double r = static_cast<double>(k) / static_cast<double>(kInterpolationPoints - 1);
    while (cursor < recall.size() && recall[cursor] < r) ++cursor;
    if (cursor < recall.size()) sum += envelope[cursor];
  }
  return sum / static_cast<double>(kInterpolationPoints);
}

BinReport evaluate_bin(std::span<const Detection> dets, std::span<const Annotation> gts, std::string label) {
  BinReport b;
  b.label = std::move(label);
  b.gt_count = gts.size();
  b.det_count = dets.size();
  b.has_data = !gts.empty();
  b.map = map_over_thresholds(dets, gts);
  b.recall = recall_at_iou(dets, gts, kRecallIouThresholds);
  return b;
}

}  // namespace

std::optional<double> average_precision(std::span<const Detection> dets, std::span<const Annotation> gts,
                                        int class_id, double dist_threshold) {
  std::vector<std::size_t> gt_idx;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (gts[i].class_id == class_id) gt_idx.push_back(i);
  }
  const auto order = ranked(dets, [&](const Detection& d) { return d.class_id == class_id; });
  if (gt_idx.empty()) {
    if (order.empty()) return std::nullopt;
    return 0.0;
  }
  if (order.empty()) return 0.0;

  std::vector<bool> taken(gt_idx.size(), false);
  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Detection& d = dets[order[rank]];
    std::size_t best = gt_idx.size();
    double best_dist = dist_threshold;
    for (std::size_t g = 0; g < gt_idx.size(); ++g) {
      if (taken[g]) continue;
      const double dist = center_distance_bev(d.box, gts[gt_idx[g]].box);
      if (dist < best_dist || (dist == best_dist && best == gt_idx.size())) {
        best = g;
        best_dist = dist;
      }
    }
    if (best < gt_idx.size()) {
      taken[best] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_idx.size()));
  }
  return interpolated_ap(precision, recall);
}

MapResult map_over_thresholds(std::span<const Detection> dets, std::span<const Annotation> gts,
                              std::span<const int> classes) {
  MapResult out;
  out.per_class.resize(kNumClasses);
  double sum = 0.0;
  for (int c : classes) {
    double class_sum = 0.0;
    bool defined = false;
    for (std::size_t t = 0; t < kDistanceThresholds.size(); ++t) {
      const auto ap = average_precision(dets, gts, c, kDistanceThresholds[t]);
      out.per_class[static_cast<std::size_t>(c)][t] = ap;
      if (ap) {
        class_sum += *ap;
        defined = true;
      }
    }
    if (defined) {
      sum += class_sum / static_cast<double>(kDistanceThresholds.size());
      ++out.classes_evaluated;
    }
  }
  out.map = out.classes_evaluated > 0 ? sum / static_cast<double>(out.classes_evaluated) : 0.0;
  return out;
}

MapResult map_over_thresholds(std::span<const Detection> dets, std::span<const Annotation> gts) {
  std::array<int, kNumClasses> all{};
  std::iota(all.begin(), all.end(), 0);
  return map_over_thresholds(dets, gts, all);
}

std::vector<double> recall_at_iou(std::span<const Detection> dets, std::span<const Annotation> gts,
                                  std::span<const double> iou_thresholds) {
  std::vector<double> out;
  out.reserve(iou_thresholds.size());
  const auto order = ranked(dets, [](const Detection&) { return true; });
  std::vector<RotatedRect> gt_rects;
  gt_rects.reserve(gts.size());
  for (const auto& g : gts) gt_rects.push_back(project_to_bev(g.box));

  for (double thr : iou_thresholds) {
    if (gts.empty()) {
      out.push_back(0.0);
      continue;
    }
    std::vector<bool> taken(gts.size(), false);
    std::size_t matched = 0;
    for (std::size_t i : order) {
      const RotatedRect dr = project_to_bev(dets[i].box);
      std::size_t best = gts.size();
      double best_iou = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g]) continue;
        const double iou = rotated_iou_2d(dr, gt_rects[g]);
        if (iou >= thr && (best == gts.size() || iou > best_iou)) {
          best = g;
          best_iou = iou;
        }
      }
      if (best < gts.size()) {
        taken[best] = true;
        ++matched;
      }
    }
    out.push_back(static_cast<double>(matched) / static_cast<double>(gts.size()));
  }
  return out;
}

std::string_view axis_name(Axis a) {
  switch (a) {
    case Axis::distance: return "distance";
    case Axis::visibility: return "visibility";
    case Axis::size: return "size";
  }
  return "unknown";
}

std::optional<Axis> axis_from_name(std::string_view name) {
  for (Axis a : {Axis::distance, Axis::visibility, Axis::size}) {
    if (axis_name(a) == name) return a;
  }
  return std::nullopt;
}

std::vector<std::string> bin_labels(Axis a) {
  switch (a) {
    case Axis::distance: return {"0-20m", "20-40m", "40+m"};
    case Axis::visibility: return {"token=4", "token=3/2/1"};
    case Axis::size: return {"0-10m3", "10-30m3", "30+m3"};
  }
  return {};
}

std::size_t bin_of(Axis a, const Box3D& box) {
  const double v = a == Axis::distance ? std::hypot(box.center.x, box.center.y) : volume(box);
  const double lo = a == Axis::distance ? 20.0 : 10.0;
  const double hi = a == Axis::distance ? 40.0 : 30.0;
  if (v < lo) return 0;
  if (v < hi) return 1;
  return 2;
}

std::size_t bin_of(const Annotation& a, Axis axis) {
  if (axis == Axis::visibility) return a.visibility == 4 ? 0 : 1;
  return bin_of(axis, a.box);
}

std::vector<std::vector<Annotation>> stratify(std::span<const Annotation> gts, Axis axis) {
  std::vector<std::vector<Annotation>> bins(bin_labels(axis).size());
  for (const auto& g : gts) bins[bin_of(g, axis)].push_back(g);
  return bins;
}

std::vector<std::vector<Detection>> stratify(std::span<const Detection> dets, Axis axis) {
  std::vector<std::vector<Detection>> bins(bin_labels(axis).size());
  for (const auto& d : dets) {
    if (axis == Axis::visibility) {
      for (auto& b : bins) b.push_back(d);
    } else {
      bins[bin_of(axis, d.box)].push_back(d);
    }
  }
  return bins;
}

StratifiedReport stratified_eval(std::span<const Detection> dets, std::span<const Annotation> gts, Axis axis) {
  StratifiedReport report;
  report.axis = axis;
  report.overall = evaluate_bin(dets, gts, "all");
  const auto labels = bin_labels(axis);
  const auto gt_bins = stratify(gts, axis);
  const auto det_bins = stratify(dets, axis);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    report.bins.push_back(evaluate_bin(det_bins[b], gt_bins[b], labels[b]));
  }
  return report;
}

std::size_t point_bucket(std::size_t count) {
  if (count == 0) return 0;
  if (count == 1) return 1;
  if (count < 5) return 2;
  if (count < 10) return 3;
  if (count < 50) return 4;
  return 5;
}

VisibilityHistogram visibility_histogram(std::span<const Annotation> annotations,
                                         std::optional<std::span<const Vec3>> points) {
  VisibilityHistogram h;
  for (const auto& a : annotations) {
    if (a.visibility < 1 || a.visibility > 4) continue;
    const std::size_t n =
        points ? points_in_box(*points, a.box) : static_cast<std::size_t>(std::max(a.num_lidar_pts, 0));
    ++h.counts[static_cast<std::size_t>(a.visibility - 1)][point_bucket(n)];
  }
  return h;
}

}  // namespace bevfuse
