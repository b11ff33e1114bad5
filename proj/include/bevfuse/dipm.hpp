#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bevfuse/ifg.hpp"
#include "bevfuse/kernels.hpp"

namespace bevfuse {

// Category-similarity rule used to validate instance pairs.
enum class Grouping { collision_cost, cbgs_groups, none };

std::string_view grouping_name(Grouping g);
std::optional<Grouping> grouping_from_name(std::string_view name);

// Group id of a class under a grouping; every class shares group 0 under `none`.
int class_group(Grouping g, int class_id);

struct MatchConfig {
  double eta = 0.7;
  Grouping grouping = Grouping::cbgs_groups;
};

enum class PairKind { eip, c_hip, l_hip };

std::string_view pair_kind_name(PairKind k);

// A pair refers to instances by their position in the LiDAR / camera
// instance lists. EIP: anchor is LiDAR, guide is camera. C-HIP: anchor is the
// hard camera instance, guide the easy LiDAR one. L-HIP: anchor is the hard
// LiDAR instance, guide the easy camera one.
struct InstancePair {
  std::size_t anchor = 0;
  std::size_t guide = 0;
  PairKind kind = PairKind::eip;
  double similarity = 0.0;  // IoU for EIP, dot product for HIP

  friend bool operator==(const InstancePair&, const InstancePair&) = default;
};

struct Stage1Result {
  std::vector<InstancePair> eip;
  // matched_lidar[t] and matched_camera[t] belong to eip[t].
  std::vector<std::size_t> matched_lidar;
  std::vector<std::size_t> matched_camera;
  std::vector<std::size_t> unmatched_lidar;
  std::vector<std::size_t> unmatched_camera;
};

// Greedy one-to-one matching over all pairs with IoU >= eta, in descending
// IoU (ties: lower LiDAR index, then lower camera index). EIPs are returned
// ordered by LiDAR index; unmatched lists are ascending.
Stage1Result stage1_match(std::span<const InstanceFeature> lidar, std::span<const InstanceFeature> camera, double eta,
                          kernels::Execution exec = kernels::Execution::serial);

// For each unmatched instance, the matched same-modality instance with the
// largest raw dot product (lowest index on ties) selects the guide: the
// counterpart at the same position. Anchor/guide indices are copied from
// `unmatched` and `matched_counterpart`.
std::vector<InstancePair> stage2_match(std::span<const InstanceFeature> instances,
                                       std::span<const std::size_t> unmatched,
                                       std::span<const std::size_t> matched_same_modality,
                                       std::span<const std::size_t> matched_counterpart, PairKind kind,
                                       kernels::Execution exec = kernels::Execution::serial);

// Keeps pairs whose anchor and guide classes fall in the same group.
std::vector<InstancePair> evaluate_pairs(std::span<const InstancePair> pairs, std::span<const InstanceFeature> lidar,
                                         std::span<const InstanceFeature> camera, Grouping grouping);

struct PairSets {
  std::vector<InstancePair> eip;
  std::vector<InstancePair> c_hip;
  std::vector<InstancePair> l_hip;
  std::size_t unmatched_lidar = 0;
  std::size_t unmatched_camera = 0;
  // Sizes before category evaluation.
  std::size_t eip_candidates = 0;
  std::size_t c_hip_candidates = 0;
  std::size_t l_hip_candidates = 0;
};

PairSets dipm(std::span<const InstanceFeature> lidar, std::span<const InstanceFeature> camera,
              const MatchConfig& config, kernels::Execution exec = kernels::Execution::serial);

}  // namespace bevfuse
