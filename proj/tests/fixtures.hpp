#pragma once

// Random scene generators shared by the unit tests and the acceptance run.

#include <vector>

#include "bevfuse/dipm.hpp"
#include "bevfuse/dualguide.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace testing_support {

struct MatchScene {
  std::vector<InstanceFeature> lidar;
  std::vector<InstanceFeature> camera;
};

// Camera boxes are mostly perturbed copies of LiDAR boxes so that many
// pairs clear the IoU threshold, plus a few unrelated ones.
inline MatchScene random_match_scene(Rng& rng, std::size_t raw_len = 6) {
  MatchScene s;
  const auto nl = static_cast<std::size_t>(rng.uniform_int(0, 8));
  const auto nc = static_cast<std::size_t>(rng.uniform_int(0, 8));
  std::vector<Box3D> lboxes;
  for (std::size_t i = 0; i < nl; ++i) {
    const Box3D b = make_box(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(1, 4), rng.uniform(1, 4),
                             rng.uniform(-3.14, 3.14));
    lboxes.push_back(b);
    s.lidar.push_back(make_instance(b, rng.uniform_int(0, 9), random_vector(rng, raw_len), i));
  }
  for (std::size_t j = 0; j < nc; ++j) {
    Box3D b;
    if (!lboxes.empty() && rng.uniform() < 0.75) {
      b = lboxes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(lboxes.size()) - 1))];
      b.center.x += rng.normal(0, 0.25);
      b.center.y += rng.normal(0, 0.25);
      b.yaw += rng.normal(0, 0.1);
    } else {
      b = make_box(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(1, 4), rng.uniform(1, 4), rng.uniform(-3.14, 3.14));
    }
    s.camera.push_back(make_instance(b, rng.uniform_int(0, 9), random_vector(rng, raw_len), j, Modality::camera));
  }
  return s;
}

inline std::vector<std::vector<double>> iou_table(const MatchScene& s) {
  std::vector<std::vector<double>> t(s.lidar.size(), std::vector<double>(s.camera.size()));
  for (std::size_t i = 0; i < s.lidar.size(); ++i) {
    for (std::size_t j = 0; j < s.camera.size(); ++j) {
      t[i][j] = rotated_iou_2d(project_to_bev(s.lidar[i].proposal.box), project_to_bev(s.camera[j].proposal.box));
    }
  }
  return t;
}

inline std::vector<std::pair<std::size_t, std::size_t>> as_pairs(const std::vector<InstancePair>& ps) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& p : ps) out.emplace_back(p.anchor, p.guide);
  return out;
}

// Stage 2 by the double-loop oracle, in the same anchor/guide convention.
inline std::vector<std::pair<std::size_t, std::size_t>> stage2_oracle(const std::vector<InstanceFeature>& inst,
                                                               const std::vector<std::size_t>& unmatched,
                                                               const std::vector<std::size_t>& matched,
                                                               const std::vector<std::size_t>& counterpart) {
  if (matched.empty()) return {};
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> k;
  for (auto u : unmatched) q.push_back(inst[u].raw);
  for (auto m : matched) k.push_back(inst[m].raw);
  const auto best = oracle::argmax_dot(q, k);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < unmatched.size(); ++i) out.emplace_back(unmatched[i], counterpart[best[i]]);
  return out;
}

inline const GridSpec kCam{8, 8, 3, 0.0, 8.0, 0.0, 8.0};
inline const GridSpec kLid{8, 8, 4, 0.0, 8.0, 0.0, 8.0};
inline constexpr std::size_t kSamples = 5;

struct EnhanceScene {
  BevGrid camera_grid;
  BevGrid lidar_grid;
  std::vector<InstanceFeature> lidar;
  std::vector<InstanceFeature> camera;
  std::vector<InstancePair> eip;
  std::vector<InstancePair> c_hip;
  std::vector<InstancePair> l_hip;
  Projection squeeze;
  Projection excitation;
};

// Centers are drawn from a handful of spots (some outside the sampling
// domain, some exactly on cell centers) so that pairs routinely share write
// cells, including EIP and C-HIP writes to the same cell.
inline EnhanceScene random_enhance_scene(Rng& rng) {
  EnhanceScene s;
  s.camera_grid = random_grid(rng, kCam, -2, 2);
  s.lidar_grid = random_grid(rng, kLid, -2, 2);
  std::vector<Vec2> spots;
  for (int i = 0; i < 4; ++i) spots.push_back({rng.uniform(0, 8), rng.uniform(0, 8)});
  spots.push_back({3.5, 4.5});
  spots.push_back({0.1, 7.9});
  auto center = [&]() {
    if (rng.uniform() < 0.6) return spots[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(spots.size()) - 1))];
    return Vec2{rng.uniform(0, 8), rng.uniform(0, 8)};
  };
  const int nl = rng.uniform_int(1, 6);
  const int nc = rng.uniform_int(1, 6);
  for (int i = 0; i < nl; ++i) {
    const Vec2 c = center();
    s.lidar.push_back(make_instance(make_box(c.x, c.y, 1, 1), 0, random_vector(rng, kSamples * 4, -2, 2)));
  }
  for (int i = 0; i < nc; ++i) {
    const Vec2 c = center();
    s.camera.push_back(make_instance(make_box(c.x, c.y, 1, 1), 0, random_vector(rng, kSamples * 3, -2, 2), 0,
                                     Modality::camera));
  }
  auto li = [&]() { return static_cast<std::size_t>(rng.uniform_int(0, nl - 1)); };
  auto ci = [&]() { return static_cast<std::size_t>(rng.uniform_int(0, nc - 1)); };
  for (int k = rng.uniform_int(0, 4); k > 0; --k) s.eip.push_back({li(), ci(), PairKind::eip, 0.9});
  for (int k = rng.uniform_int(0, 4); k > 0; --k) s.c_hip.push_back({ci(), li(), PairKind::c_hip, 1.0});
  for (int k = rng.uniform_int(0, 5); k > 0; --k) s.l_hip.push_back({li(), ci(), PairKind::l_hip, 1.0});
  s.squeeze = Projection::seeded(3, kSamples * 4, rng.next());
  s.excitation = Projection::seeded(4, kSamples * 3, rng.next());
  return s;
}

inline std::vector<oracle::GuidePair> pgie_pairs(const EnhanceScene& s, const std::vector<InstancePair>& ps, bool camera_anchor) {
  std::vector<oracle::GuidePair> out;
  for (const auto& p : ps) {
    const auto& cam = s.camera[camera_anchor ? p.anchor : p.guide];
    const auto& lid = s.lidar[camera_anchor ? p.guide : p.anchor];
    out.push_back({cam.bev_center().x, cam.bev_center().y, lid.raw});
  }
  return out;
}

// Library output vs the step-by-step transliteration, bit for bit.
inline bool pgie_matches_oracle(const EnhanceScene& s, kernels::Execution ex = kernels::Execution::serial) {
  const auto enh = pgie(s.camera_grid, s.lidar, s.camera, s.eip, s.c_hip, s.squeeze, ex);
  const auto ref = oracle::pgie_steps(to_grid3(s.camera_grid), pgie_pairs(s, s.eip, false),
                                      pgie_pairs(s, s.c_hip, true), s.squeeze.matrix, s.squeeze.bias);
  return bit_identical(enh, ref);
}

inline bool igpe_matches_oracle(const EnhanceScene& s, kernels::Execution ex = kernels::Execution::serial) {
  std::vector<oracle::GuidePair> lp;
  std::vector<Vec2> guide_xy;
  for (const auto& p : s.l_hip) {
    lp.push_back({s.lidar[p.anchor].bev_center().x, s.lidar[p.anchor].bev_center().y, s.camera[p.guide].raw});
    guide_xy.push_back(s.camera[p.guide].bev_center());
  }
  const auto enh = igpe(s.lidar_grid, s.lidar, s.camera, s.l_hip, s.excitation, ex);
  const auto ref = oracle::igpe_steps(to_grid3(s.lidar_grid), lp, guide_xy, s.excitation.matrix, s.excitation.bias);
  return bit_identical(enh, ref);
}

}  // namespace testing_support
