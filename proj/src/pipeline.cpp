#include "bevfuse/pipeline.hpp"

#include <cmath>
#include <set>
#include <string>

#include <fmt/format.h>

#include "bevfuse/error.hpp"
#include "bevfuse/io.hpp"
#include "bevfuse/log.hpp"

namespace bevfuse {
namespace {

using nlohmann::json;

constexpr std::uint64_t kSqueezeStream = 0x51;
constexpr std::uint64_t kExcitationStream = 0xe3;
constexpr std::uint64_t kContextStream = 0xc7;

std::string describe(const GridSpec& s) {
  return fmt::format("{}x{} over x[{}, {}] y[{}, {}]", s.height, s.width, s.x_min, s.x_max, s.y_min, s.y_max);
}

Projection projection_for(const std::optional<std::filesystem::path>& path, std::size_t rows, std::size_t cols,
                          std::uint64_t seed, const char* what) {
  if (!path) return Projection::seeded(rows, cols, seed);
  Projection p = io::load_projection(*path);
  if (p.rows != rows || p.cols != cols) {
    throw ConfigError(fmt::format("{} weights {} are {}x{}, expected {}x{}", what, path->string(), p.rows, p.cols,
                                  rows, cols));
  }
  return p;
}

void check_expected(const std::optional<GridSpec>& expected, const GridSpec& actual, const char* what) {
  if (expected && !expected->same_window(actual)) {
    throw ConfigError(fmt::format("{} grid is {}, configured window is {}", what, describe(actual),
                                  describe(*expected)));
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  lambdas.validate();
  readout.validate();
  if (grid) grid->validate();
}

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"gamma",    "eta",     "lambdas", "sampling",          "grouping",
                                           "grid",     "weight_seed", "squeeze_weights", "excitation_weights",
                                           "threads",  "enhance", "readout"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config key \"" + k + "\"");
  }
  PipelineConfig c;
  auto path = [&](const json& v) {
    std::filesystem::path p = v.get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  try {
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("eta")) c.eta = j["eta"].get<double>();
    if (j.contains("lambdas")) {
      const auto& l = j["lambdas"];
      c.lambdas.lambda_head = l.value("head", c.lambdas.lambda_head);
      c.lambdas.lambda_lidar = l.value("lidar", c.lambdas.lambda_lidar);
      c.lambdas.lambda_camera = l.value("camera", c.lambdas.lambda_camera);
      c.lambdas.lambda_cos = l.value("cos", c.lambdas.lambda_cos);
    }
    if (j.contains("sampling")) {
      const auto s = strategy_from_name(j["sampling"].get<std::string>());
      if (!s) throw ConfigError("unknown sampling strategy \"" + j["sampling"].get<std::string>() + "\"");
      c.sampling = *s;
    }
    if (j.contains("grouping")) {
      const auto g = grouping_from_name(j["grouping"].get<std::string>());
      if (!g) throw ConfigError("unknown grouping \"" + j["grouping"].get<std::string>() + "\"");
      c.grouping = *g;
    }
    if (j.contains("grid")) c.grid = io::spec_from_json(j["grid"]);
    if (j.contains("weight_seed")) c.weight_seed = j["weight_seed"].get<std::uint64_t>();
    if (j.contains("squeeze_weights")) c.squeeze_weights = path(j["squeeze_weights"]);
    if (j.contains("excitation_weights")) c.excitation_weights = path(j["excitation_weights"]);
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("enhance")) c.enhance = j["enhance"].get<bool>();
    if (j.contains("readout")) {
      c.readout.threshold = j["readout"].value("threshold", c.readout.threshold);
      c.readout.attach_radius = j["readout"].value("attach_radius", c.readout.attach_radius);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

json PipelineConfig::to_json() const {
  json j = {{"gamma", gamma},
            {"eta", eta},
            {"lambdas",
             {{"head", lambdas.lambda_head},
              {"lidar", lambdas.lambda_lidar},
              {"camera", lambdas.lambda_camera},
              {"cos", lambdas.lambda_cos}}},
            {"sampling", std::string(strategy_name(sampling))},
            {"grouping", std::string(grouping_name(grouping))},
            {"weight_seed", weight_seed},
            {"threads", threads},
            {"enhance", enhance},
            {"readout", {{"threshold", readout.threshold}, {"attach_radius", readout.attach_radius}}}};
  if (grid) j["grid"] = io::spec_to_json(*grid);
  if (squeeze_weights) j["squeeze_weights"] = squeeze_weights->generic_string();
  if (excitation_weights) j["excitation_weights"] = excitation_weights->generic_string();
  return j;
}

void check_windows(const GridSpec& lidar, const GridSpec& camera) {
  if (!lidar.same_window(camera)) {
    throw ConfigError(fmt::format("grid window mismatch: lidar {} vs camera {}", describe(lidar), describe(camera)));
  }
}

namespace {

MatchResult match_on(const BevGrid& lidar_grid, const BevGrid& feature_camera,
                     std::span<const Proposal> lidar_proposals, std::span<const Proposal> camera_proposals,
                     const PipelineConfig& config) {
  const auto exec = config.execution();
  MatchResult m;
  m.lidar = generate_instances(lidar_grid, lidar_proposals, config.gamma, config.sampling, exec);
  m.camera = generate_instances(feature_camera, camera_proposals, config.gamma, config.sampling, exec);
  m.pairs = dipm(m.lidar.instances, m.camera.instances, MatchConfig{config.eta, config.grouping}, exec);
  log::info("pairs: {} EIP, {} C-HIP, {} L-HIP", m.pairs.eip.size(), m.pairs.c_hip.size(), m.pairs.l_hip.size());
  return m;
}

BevGrid refine_camera(const BevGrid& camera_grid, const PipelineConfig& config) {
  const auto weights = ContextWeights::seeded(camera_grid.channels(), config.weight_seed ^ kContextStream);
  return global_context_refine(camera_grid, weights, config.execution());
}

void prepare(const BevGrid& lidar_grid, const BevGrid& camera_grid, const PipelineConfig& config) {
  config.validate();
  check_windows(lidar_grid.spec(), camera_grid.spec());
  check_expected(config.grid, lidar_grid.spec(), "lidar");
  kernels::set_thread_count(config.threads);
}

}  // namespace

MatchResult run_matching(const BevGrid& lidar_grid, const BevGrid& camera_grid,
                         std::span<const Proposal> lidar_proposals, std::span<const Proposal> camera_proposals,
                         const PipelineConfig& config) {
  prepare(lidar_grid, camera_grid, config);
  return match_on(lidar_grid, refine_camera(camera_grid, config), lidar_proposals, camera_proposals, config);
}

FusionResult run_fusion(const BevGrid& lidar_grid, const BevGrid& camera_grid,
                        std::span<const Proposal> lidar_proposals, std::span<const Proposal> camera_proposals,
                        const PipelineConfig& config) {
  prepare(lidar_grid, camera_grid, config);
  FusionResult r;
  r.refined_camera = refine_camera(camera_grid, config);
  auto m = match_on(lidar_grid, r.refined_camera, lidar_proposals, camera_proposals, config);
  r.lidar = std::move(m.lidar);
  r.camera = std::move(m.camera);
  r.pairs = std::move(m.pairs);

  const std::size_t k = samples_per_instance(config.sampling);
  const auto cl = static_cast<std::size_t>(lidar_grid.channels());
  const auto cc = static_cast<std::size_t>(camera_grid.channels());
  r.squeeze = projection_for(config.squeeze_weights, cc, k * cl, config.weight_seed ^ kSqueezeStream, "squeeze");
  r.excitation =
      projection_for(config.excitation_weights, cl, k * cc, config.weight_seed ^ kExcitationStream, "excitation");

  if (config.enhance) {
    const auto exec = config.execution();
    r.enhanced_camera =
        pgie(camera_grid, r.lidar.instances, r.camera.instances, r.pairs.eip, r.pairs.c_hip, r.squeeze, exec);
    r.enhanced_lidar = igpe(lidar_grid, r.lidar.instances, r.camera.instances, r.pairs.l_hip, r.excitation, exec);
  } else {
    r.enhanced_camera = camera_grid;
    r.enhanced_lidar = lidar_grid;
  }
  r.fused = fuse(r.enhanced_camera, r.enhanced_lidar);
  return r;
}

std::vector<int> center_targets(const GridSpec& spec, std::span<const Annotation> annotations) {
  std::vector<int> t(spec.cell_count(), 0);
  for (const auto& a : annotations) {
    const CellIndex c = nearest_cell(absl_to_rela({a.box.center.x, a.box.center.y}, spec), spec);
    t[static_cast<std::size_t>(c.row) * static_cast<std::size_t>(spec.width) + static_cast<std::size_t>(c.col)] = 1;
  }
  return t;
}

double readout_focal_loss(const BevGrid& grid, std::span<const int> targets, double threshold) {
  auto prob = cell_energy(grid);
  for (auto& e : prob) e = energy_probability(e, threshold);
  return focal_loss(prob, targets);
}

LossBreakdown pipeline_losses(const FusionResult& fusion, const BevGrid& lidar_grid, const BevGrid& camera_grid,
                              std::span<const Annotation> annotations, const PipelineConfig& config,
                              CosHistory& history) {
  const auto targets = center_targets(fusion.fused.spec(), annotations);
  const double tau = config.readout.threshold;
  const double head = readout_focal_loss(fusion.fused, targets, tau);
  const double lidar = readout_focal_loss(lidar_grid, targets, tau);
  const double camera = readout_focal_loss(camera_grid, targets, tau);
  const auto cos = cosine_loss(fusion.pairs.eip, fusion.lidar.instances, fusion.camera.instances, fusion.squeeze);
  return total_loss(head, lidar, camera, cos, config.lambdas, history);
}

}  // namespace bevfuse
