#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/geometry.hpp"

namespace bevfuse {

enum class Modality { lidar, camera };

// nuScenes detection taxonomy, in devkit order.
enum class ObjectClass : int {
  car = 0,
  truck,
  construction_vehicle,
  bus,
  trailer,
  barrier,
  motorcycle,
  bicycle,
  pedestrian,
  traffic_cone,
};
inline constexpr int kNumClasses = 10;

std::string_view class_name(int class_id);
std::optional<int> class_from_name(std::string_view name);
std::string_view modality_name(Modality m);
std::optional<Modality> modality_from_name(std::string_view name);

struct Proposal {
  Box3D box;
  double score = 0.0;
  int class_id = 0;
  Modality modality = Modality::lidar;
};

// Key-sample sets; the sample count k is 1, 5, 5 and 9 respectively.
enum class SamplingStrategy { center, center_vertices, center_boundary_mid, center_vertices_boundary_mid };

std::size_t samples_per_instance(SamplingStrategy s);
std::string_view strategy_name(SamplingStrategy s);
std::optional<SamplingStrategy> strategy_from_name(std::string_view name);

// Concatenated key-sample features of one proposal.
struct InstanceFeature {
  Proposal proposal;
  std::size_t source_index = 0;  // position in the unfiltered proposal list
  SamplingStrategy strategy = SamplingStrategy::center_boundary_mid;
  std::vector<double> raw;

  Vec2 bev_center() const { return {proposal.box.center.x, proposal.box.center.y}; }
};

// Keeps proposals with score >= gamma, in input order.
std::vector<Proposal> score_filter(std::span<const Proposal> proposals, double gamma);

// Metric sample points in concatenation order: center, then the four corners
// counter-clockwise from (+w, +l) when included, then top, bottom, left, right
// boundary midpoints when included.
std::vector<Vec2> sample_points(const RotatedRect& rect, SamplingStrategy strategy);

// Empty when the proposal center lies outside the grid window.
std::optional<InstanceFeature> extract_instance(const BevGrid& grid, const Proposal& proposal,
                                                SamplingStrategy strategy, std::size_t source_index = 0);

struct InstanceBatch {
  std::vector<InstanceFeature> instances;
  std::vector<std::size_t> skipped;  // source indices whose centers fell outside the window
};

// score_filter followed by extract_instance; output keeps input order.
InstanceBatch generate_instances(const BevGrid& grid, std::span<const Proposal> proposals, double gamma,
                                 SamplingStrategy strategy,
                                 kernels::Execution exec = kernels::Execution::serial);

}  // namespace bevfuse
