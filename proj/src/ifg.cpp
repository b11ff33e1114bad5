#include "bevfuse/ifg.hpp"

#include <array>

#include "bevfuse/log.hpp"

namespace bevfuse {
namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "car", "truck", "construction_vehicle", "bus", "trailer",
    "barrier", "motorcycle", "bicycle", "pedestrian", "traffic_cone"};

constexpr std::array<std::string_view, 4> kStrategyNames{
    "center", "center+vertices", "center+boundary_mid", "center+vertices+boundary_mid"};

bool uses_vertices(SamplingStrategy s) {
  return s == SamplingStrategy::center_vertices || s == SamplingStrategy::center_vertices_boundary_mid;
}

bool uses_boundary_mid(SamplingStrategy s) {
  return s == SamplingStrategy::center_boundary_mid || s == SamplingStrategy::center_vertices_boundary_mid;
}

}  // namespace

std::string_view class_name(int class_id) {
  if (class_id < 0 || class_id >= kNumClasses) return "unknown";
  return kClassNames[static_cast<std::size_t>(class_id)];
}

std::optional<int> class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string_view modality_name(Modality m) { return m == Modality::lidar ? "lidar" : "camera"; }

std::optional<Modality> modality_from_name(std::string_view name) {
  if (name == "lidar") return Modality::lidar;
  if (name == "camera") return Modality::camera;
  return std::nullopt;
}

std::size_t samples_per_instance(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::center: return 1;
    case SamplingStrategy::center_vertices: return 5;
    case SamplingStrategy::center_boundary_mid: return 5;
    case SamplingStrategy::center_vertices_boundary_mid: return 9;
  }
  return 0;
}

std::string_view strategy_name(SamplingStrategy s) { return kStrategyNames[static_cast<std::size_t>(s)]; }

std::optional<SamplingStrategy> strategy_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i) {
    if (kStrategyNames[i] == name) return static_cast<SamplingStrategy>(i);
  }
  return std::nullopt;
}

std::vector<Proposal> score_filter(std::span<const Proposal> proposals, double gamma) {
  std::vector<Proposal> kept;
  for (const auto& p : proposals) {
    if (p.score >= gamma) kept.push_back(p);
  }
  return kept;
}

std::vector<Vec2> sample_points(const RotatedRect& rect, SamplingStrategy strategy) {
  std::vector<Vec2> pts;
  pts.reserve(samples_per_instance(strategy));
  const KeySamples ks = key_samples(rect);
  pts.push_back(ks.center);
  if (uses_vertices(strategy)) {
    for (const auto& v : rect.corners()) pts.push_back(v);
  }
  if (uses_boundary_mid(strategy)) {
    pts.push_back(ks.top);
    pts.push_back(ks.bottom);
    pts.push_back(ks.left);
    pts.push_back(ks.right);
  }
  return pts;
}

std::optional<InstanceFeature> extract_instance(const BevGrid& grid, const Proposal& proposal,
                                                SamplingStrategy strategy, std::size_t source_index) {
  const RotatedRect rect = project_to_bev(proposal.box);
  if (!grid.spec().contains(rect.center)) return std::nullopt;

  InstanceFeature inst;
  inst.proposal = proposal;
  inst.source_index = source_index;
  inst.strategy = strategy;
  const auto channels = static_cast<std::size_t>(grid.channels());
  const auto points = sample_points(rect, strategy);
  inst.raw.resize(points.size() * channels);
  for (std::size_t k = 0; k < points.size(); ++k) {
    bilinear_sample(grid, absl_to_rela(points[k], grid.spec()),
                    std::span<double>(inst.raw).subspan(k * channels, channels));
  }
  return inst;
}

InstanceBatch generate_instances(const BevGrid& grid, std::span<const Proposal> proposals, double gamma,
                                 SamplingStrategy strategy, kernels::Execution exec) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (proposals[i].score >= gamma) kept.push_back(i);
  }

  std::vector<std::optional<InstanceFeature>> slots(kept.size());
  const auto n = static_cast<std::ptrdiff_t>(kept.size());
#pragma omp parallel for schedule(static) if (exec == kernels::Execution::parallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const std::size_t src = kept[static_cast<std::size_t>(k)];
    slots[static_cast<std::size_t>(k)] = extract_instance(grid, proposals[src], strategy, src);
  }

  InstanceBatch batch;
  batch.instances.reserve(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (slots[k]) {
      batch.instances.push_back(std::move(*slots[k]));
    } else {
      batch.skipped.push_back(kept[k]);
      log::info("skipping {} proposal {}: center outside the grid window",
                modality_name(proposals[kept[k]].modality), kept[k]);
    }
  }
  return batch;
}

}  // namespace bevfuse
