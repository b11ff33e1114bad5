#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevfuse/geometry.hpp"
#include "bevfuse/ifg.hpp"

namespace bevfuse {

struct Annotation {
  Box3D box;
  int class_id = 0;
  int visibility = 4;  // nuScenes visibility token, 1..4
  int num_lidar_pts = 0;
};

struct Detection {
  Box3D box;
  int class_id = 0;
  double score = 0.0;
};

inline constexpr std::array<double, 4> kDistanceThresholds{0.5, 1.0, 2.0, 4.0};
inline constexpr std::array<double, 3> kRecallIouThresholds{0.3, 0.5, 0.7};

// Center-distance AP for one class with 101-point interpolated precision.
// nullopt when the class has neither detections nor ground truth.
std::optional<double> average_precision(std::span<const Detection> dets, std::span<const Annotation> gts,
                                        int class_id, double dist_threshold);

struct MapResult {
  double map = 0.0;
  // per_class[c][t]: AP of class c at kDistanceThresholds[t]; nullopt when undefined.
  std::vector<std::array<std::optional<double>, kDistanceThresholds.size()>> per_class;
  std::size_t classes_evaluated = 0;
};

// Mean over the classes with a defined AP of the mean over kDistanceThresholds.
MapResult map_over_thresholds(std::span<const Detection> dets, std::span<const Annotation> gts,
                              std::span<const int> classes);
MapResult map_over_thresholds(std::span<const Detection> dets, std::span<const Annotation> gts);

// Class-agnostic greedy BEV-IoU matching in descending score order. A
// threshold with no ground truth reports 0.
std::vector<double> recall_at_iou(std::span<const Detection> dets, std::span<const Annotation> gts,
                                  std::span<const double> iou_thresholds);

enum class Axis { distance, visibility, size };

std::string_view axis_name(Axis a);
std::optional<Axis> axis_from_name(std::string_view name);
std::vector<std::string> bin_labels(Axis a);

// Bin of a box along the distance or size axis.
std::size_t bin_of(Axis a, const Box3D& box);
std::size_t bin_of(const Annotation& a, Axis axis);

std::vector<std::vector<Annotation>> stratify(std::span<const Annotation> gts, Axis axis);
// Visibility is a ground-truth attribute; detections can only be split by distance or size.
std::vector<std::vector<Detection>> stratify(std::span<const Detection> dets, Axis axis);

struct BinReport {
  std::string label;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  bool has_data = false;
  MapResult map;
  std::vector<double> recall;  // at kRecallIouThresholds
};

struct StratifiedReport {
  Axis axis = Axis::distance;
  BinReport overall;
  std::vector<BinReport> bins;
};

// Visibility masks ground truth only; distance and size mask both sides.
StratifiedReport stratified_eval(std::span<const Detection> dets, std::span<const Annotation> gts, Axis axis);

inline constexpr std::array<std::string_view, 6> kPointBuckets{"0", "1", "2-4", "5-9", "10-49", "50+"};

std::size_t point_bucket(std::size_t count);

// counts[token - 1][bucket].
struct VisibilityHistogram {
  std::array<std::array<std::size_t, kPointBuckets.size()>, 4> counts{};

  friend bool operator==(const VisibilityHistogram&, const VisibilityHistogram&) = default;
};

// Uses points_in_box over `points` when given, the stored num_lidar_pts otherwise.
VisibilityHistogram visibility_histogram(std::span<const Annotation> annotations,
                                         std::optional<std::span<const Vec3>> points = std::nullopt);

}  // namespace bevfuse
