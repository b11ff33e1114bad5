#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/dipm.hpp"
#include "bevfuse/dualguide.hpp"
#include "bevfuse/ifg.hpp"
#include "bevfuse/losses.hpp"
#include "bevfuse/readout.hpp"

namespace bevfuse {

struct PipelineConfig {
  double gamma = 0.7;
  double eta = 0.7;
  LossWeights lambdas;
  SamplingStrategy sampling = SamplingStrategy::center_boundary_mid;
  Grouping grouping = Grouping::cbgs_groups;
  // Expected grid window; inputs are checked against it when set.
  std::optional<GridSpec> grid;
  // Projection and context weights are drawn from this seed unless weight
  // files are given.
  std::uint64_t weight_seed = 17;
  std::optional<std::filesystem::path> squeeze_weights;
  std::optional<std::filesystem::path> excitation_weights;
  int threads = 1;
  bool enhance = true;
  ReadoutConfig readout;

  void validate() const;
  kernels::Execution execution() const {
    return threads > 1 ? kernels::Execution::parallel : kernels::Execution::serial;
  }

  // Unknown keys are rejected. Relative weight paths resolve against `base`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  nlohmann::json to_json() const;
};

struct FusionResult {
  BevGrid refined_camera;
  InstanceBatch lidar;
  InstanceBatch camera;
  PairSets pairs;
  Projection squeeze;
  Projection excitation;
  BevGrid enhanced_camera;
  BevGrid enhanced_lidar;
  BevGrid fused;
};

// Throws ConfigError naming both windows when the grids disagree.
void check_windows(const GridSpec& lidar, const GridSpec& camera);

// Instance generation and matching only.
struct MatchResult {
  InstanceBatch lidar;
  InstanceBatch camera;
  PairSets pairs;
};
MatchResult run_matching(const BevGrid& lidar_grid, const BevGrid& camera_grid,
                         std::span<const Proposal> lidar_proposals, std::span<const Proposal> camera_proposals,
                         const PipelineConfig& config);

// Global-context refinement of the camera grid (used only for instance
// features), instance generation, matching, both enhancements and fusion.
// With enhance == false the original grids are fused directly.
FusionResult run_fusion(const BevGrid& lidar_grid, const BevGrid& camera_grid,
                        std::span<const Proposal> lidar_proposals, std::span<const Proposal> camera_proposals,
                        const PipelineConfig& config);

// Per-cell object target: 1 at the nearest cell of every annotation center.
std::vector<int> center_targets(const GridSpec& spec, std::span<const Annotation> annotations);

// Focal loss of the readout probability of each cell against center targets.
double readout_focal_loss(const BevGrid& grid, std::span<const int> targets, double threshold);

// Head, LiDAR-branch and camera-branch focal losses plus the EIP cosine loss,
// combined with the configured weights.
LossBreakdown pipeline_losses(const FusionResult& fusion, const BevGrid& lidar_grid, const BevGrid& camera_grid,
                              std::span<const Annotation> annotations, const PipelineConfig& config,
                              CosHistory& history);

}  // namespace bevfuse
