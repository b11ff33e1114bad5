#include "bevfuse/dipm.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "bevfuse/error.hpp"

namespace bevfuse {
namespace {

using C = ObjectClass;

constexpr int group_of(C c, Grouping g) {
  switch (g) {
    case Grouping::collision_cost:
      return (c == C::barrier || c == C::pedestrian || c == C::traffic_cone) ? 0 : 1;
    case Grouping::cbgs_groups:
      switch (c) {
        case C::car: return 0;
        case C::truck:
        case C::construction_vehicle: return 1;
        case C::bus:
        case C::trailer: return 2;
        case C::barrier: return 3;
        case C::motorcycle:
        case C::bicycle: return 4;
        case C::pedestrian:
        case C::traffic_cone: return 5;
      }
      return -1;
    case Grouping::none: return 0;
  }
  return -1;
}

struct Candidate {
  double iou;
  std::size_t lidar;
  std::size_t camera;
};

}  // namespace

std::string_view grouping_name(Grouping g) {
  switch (g) {
    case Grouping::collision_cost: return "collision_cost";
    case Grouping::cbgs_groups: return "cbgs_groups";
    case Grouping::none: return "none";
  }
  return "unknown";
}

std::optional<Grouping> grouping_from_name(std::string_view name) {
  for (Grouping g : {Grouping::collision_cost, Grouping::cbgs_groups, Grouping::none}) {
    if (grouping_name(g) == name) return g;
  }
  return std::nullopt;
}

int class_group(Grouping g, int class_id) {
  if (class_id < 0 || class_id >= kNumClasses) return -1;
  return group_of(static_cast<C>(class_id), g);
}

std::string_view pair_kind_name(PairKind k) {
  switch (k) {
    case PairKind::eip: return "EIP";
    case PairKind::c_hip: return "C-HIP";
    case PairKind::l_hip: return "L-HIP";
  }
  return "unknown";
}

Stage1Result stage1_match(std::span<const InstanceFeature> lidar, std::span<const InstanceFeature> camera, double eta,
                          kernels::Execution exec) {
  std::vector<RotatedRect> lr;
  std::vector<RotatedRect> cr;
  lr.reserve(lidar.size());
  cr.reserve(camera.size());
  for (const auto& i : lidar) lr.push_back(project_to_bev(i.proposal.box));
  for (const auto& i : camera) cr.push_back(project_to_bev(i.proposal.box));
  const auto iou = kernels::iou_matrix(exec, lr, cr);

  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    for (std::size_t j = 0; j < camera.size(); ++j) {
      const double v = iou[i * camera.size() + j];
      if (v >= eta) cands.push_back({v, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.lidar != b.lidar) return a.lidar < b.lidar;
    return a.camera < b.camera;
  });

  std::vector<bool> lidar_used(lidar.size(), false);
  std::vector<bool> camera_used(camera.size(), false);
  Stage1Result out;
  for (const auto& c : cands) {
    if (lidar_used[c.lidar] || camera_used[c.camera]) continue;
    lidar_used[c.lidar] = true;
    camera_used[c.camera] = true;
    out.eip.push_back({c.lidar, c.camera, PairKind::eip, c.iou});
  }
  std::sort(out.eip.begin(), out.eip.end(),
            [](const InstancePair& a, const InstancePair& b) { return a.anchor < b.anchor; });
  for (const auto& p : out.eip) {
    out.matched_lidar.push_back(p.anchor);
    out.matched_camera.push_back(p.guide);
  }
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    if (!lidar_used[i]) out.unmatched_lidar.push_back(i);
  }
  for (std::size_t j = 0; j < camera.size(); ++j) {
    if (!camera_used[j]) out.unmatched_camera.push_back(j);
  }
  return out;
}

std::vector<InstancePair> stage2_match(std::span<const InstanceFeature> instances,
                                       std::span<const std::size_t> unmatched,
                                       std::span<const std::size_t> matched_same_modality,
                                       std::span<const std::size_t> matched_counterpart, PairKind kind,
                                       kernels::Execution exec) {
  if (unmatched.empty() || matched_same_modality.empty()) return {};
  if (matched_same_modality.size() != matched_counterpart.size()) {
    throw ConfigError("stage2_match: matched list and counterpart list differ in length");
  }
  const std::size_t length = instances[matched_same_modality.front()].raw.size();
  auto pack = [&](std::span<const std::size_t> idx) {
    std::vector<double> flat;
    flat.reserve(idx.size() * length);
    for (std::size_t i : idx) {
      const auto& raw = instances[i].raw;
      if (raw.size() != length) {
        throw ConfigError("stage2_match: instance vectors differ in length (" + std::to_string(raw.size()) + " vs " +
                          std::to_string(length) + ")");
      }
      flat.insert(flat.end(), raw.begin(), raw.end());
    }
    return flat;
  };
  const auto queries = pack(unmatched);
  const auto keys = pack(matched_same_modality);
  const auto best = kernels::dot_argmax(exec, queries, keys, length);

  std::vector<InstancePair> out;
  out.reserve(unmatched.size());
  for (std::size_t k = 0; k < unmatched.size(); ++k) {
    out.push_back({unmatched[k], matched_counterpart[best[k].index], kind, best[k].value});
  }
  return out;
}

std::vector<InstancePair> evaluate_pairs(std::span<const InstancePair> pairs, std::span<const InstanceFeature> lidar,
                                         std::span<const InstanceFeature> camera, Grouping grouping) {
  std::vector<InstancePair> kept;
  for (const auto& p : pairs) {
    const bool anchor_is_lidar = p.kind != PairKind::c_hip;
    const int anchor_cls = anchor_is_lidar ? lidar[p.anchor].proposal.class_id : camera[p.anchor].proposal.class_id;
    const int guide_cls = anchor_is_lidar ? camera[p.guide].proposal.class_id : lidar[p.guide].proposal.class_id;
    const int ga = class_group(grouping, anchor_cls);
    if (ga >= 0 && ga == class_group(grouping, guide_cls)) kept.push_back(p);
  }
  return kept;
}

PairSets dipm(std::span<const InstanceFeature> lidar, std::span<const InstanceFeature> camera,
              const MatchConfig& config, kernels::Execution exec) {
  const Stage1Result s1 = stage1_match(lidar, camera, config.eta, exec);
  const auto c_hip = stage2_match(camera, s1.unmatched_camera, s1.matched_camera, s1.matched_lidar, PairKind::c_hip, exec);
  const auto l_hip = stage2_match(lidar, s1.unmatched_lidar, s1.matched_lidar, s1.matched_camera, PairKind::l_hip, exec);

  PairSets sets;
  sets.unmatched_lidar = s1.unmatched_lidar.size();
  sets.unmatched_camera = s1.unmatched_camera.size();
  sets.eip_candidates = s1.eip.size();
  sets.c_hip_candidates = c_hip.size();
  sets.l_hip_candidates = l_hip.size();
  sets.eip = evaluate_pairs(s1.eip, lidar, camera, config.grouping);
  sets.c_hip = evaluate_pairs(c_hip, lidar, camera, config.grouping);
  sets.l_hip = evaluate_pairs(l_hip, lidar, camera, config.grouping);
  return sets;
}

}  // namespace bevfuse
