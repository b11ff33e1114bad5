#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bevfuse/dipm.hpp"
#include "bevfuse/dualguide.hpp"

namespace bevfuse {

struct LossWeights {
  double lambda_head = 0.99;
  double lambda_lidar = 1e-4;
  double lambda_camera = 1e-4;
  double lambda_cos = 1e-2;

  void validate() const;
};

// Running maximum of the cosine loss, substituted on batches without EIPs.
struct CosHistory {
  double max_seen = 0.0;
};

inline constexpr double kFocalAlpha = 0.25;
inline constexpr double kFocalGamma = 2.0;
inline constexpr double kProbabilityClamp = 1e-7;

// mean of -alpha * (1 - p_t)^gamma * log(p_t), p_t = p for target 1 and 1 - p for target 0.
double focal_loss(std::span<const double> pred_prob, std::span<const int> target, double alpha = kFocalAlpha,
                  double gamma = kFocalGamma);

// Mean absolute difference.
double l1_loss(std::span<const double> pred, std::span<const double> target);

// Mean of (1 - cos) over vector pairs; nullopt when no pair has two
// non-zero vectors.
std::optional<double> cosine_loss(std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs);

// EIP form: each LiDAR member is squeezed to the camera channel count and
// compared with the camera member's center sample (its leading C_C values).
std::optional<double> cosine_loss(std::span<const InstancePair> eip, std::span<const InstanceFeature> lidar,
                                  std::span<const InstanceFeature> camera, const Projection& squeeze);

struct LossBreakdown {
  double head = 0.0;
  double lidar = 0.0;
  double camera = 0.0;
  double cos = 0.0;
  bool cos_from_history = false;
  double total = 0.0;
};

// Updates `history` when a cosine value is present; uses history.max_seen otherwise.
LossBreakdown total_loss(double l_head, double l_lidar, double l_camera, std::optional<double> cos_result,
                         const LossWeights& weights, CosHistory& history);

}  // namespace bevfuse
