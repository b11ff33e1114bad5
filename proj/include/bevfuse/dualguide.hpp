#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/dipm.hpp"
#include "bevfuse/ifg.hpp"

namespace bevfuse {

// Linear map from an instance vector to a target channel count.
struct Projection {
  std::size_t rows = 0;  // target channels
  std::size_t cols = 0;  // source length
  std::vector<double> matrix;  // rows x cols, row-major
  std::vector<double> bias;

  static Projection zeros(std::size_t rows, std::size_t cols);
  // Identity on the leading min(rows, cols) entries, zero bias.
  static Projection identity(std::size_t rows, std::size_t cols);
  // Uniform(-s, s) weights and bias, s = 1/sqrt(cols).
  static Projection seeded(std::size_t rows, std::size_t cols, std::uint64_t seed);

  std::vector<double> apply(std::span<const double> x) const;
  void validate() const;
};

// Point_Squeeze: LiDAR guide vector to the camera channel count.
std::vector<double> point_squeeze(const InstanceFeature& inst, const Projection& proj);
// Point_Excitation: camera guide vector to the LiDAR channel count.
std::vector<double> point_excitation(const InstanceFeature& inst, const Projection& proj);

struct PairWeights {
  std::vector<double> distances;
  std::vector<double> weights;
};

// w = 1 - (d - min) / (max - min); every weight is 1 when max == min.
PairWeights distance_weights(std::vector<double> distances);

// Weights over BEV-center distances between each hard LiDAR anchor and its camera guide.
PairWeights igpe_weights(std::span<const InstancePair> l_hip, std::span<const InstanceFeature> lidar,
                         std::span<const InstanceFeature> camera);

// Point-guided camera enhancement. Samples always come from `camera_grid`;
// EIP writes start from the original cell value, C-HIP writes accumulate on
// the enhanced grid.
BevGrid pgie(const BevGrid& camera_grid, std::span<const InstanceFeature> lidar,
             std::span<const InstanceFeature> camera, std::span<const InstancePair> eip,
             std::span<const InstancePair> c_hip, const Projection& squeeze,
             kernels::Execution exec = kernels::Execution::serial);

// Image-guided LiDAR enhancement. Each of the (up to four) cells around a
// hard LiDAR center is set to its original value plus the weighted, excited
// camera guide; shared cells keep the last write.
BevGrid igpe(const BevGrid& lidar_grid, std::span<const InstanceFeature> lidar,
             std::span<const InstanceFeature> camera, std::span<const InstancePair> l_hip,
             const Projection& excitation, kernels::Execution exec = kernels::Execution::serial);

// Channel concatenation, LiDAR channels first.
BevGrid fuse(const BevGrid& enh_camera, const BevGrid& enh_lidar);

}  // namespace bevfuse
