#include "bevfuse/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bevfuse/error.hpp"
#include "bevfuse/io.hpp"
#include "bevfuse/log.hpp"
#include "bevfuse/pipeline.hpp"
#include "bevfuse/readout.hpp"
#include "bevfuse/scene.hpp"

namespace bevfuse {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Pipeline flags shared by fuse, match and loss; unset ones leave the config untouched.
struct Overrides {
  std::optional<double> gamma;
  std::optional<double> eta;
  std::optional<std::string> sampling;
  std::optional<std::string> grouping;
  std::optional<std::uint64_t> weight_seed;
  std::optional<std::string> squeeze_weights;
  std::optional<std::string> excitation_weights;
  std::optional<double> readout_threshold;

  void attach(CLI::App* app) {
    app->add_option("--gamma", gamma, "proposal score threshold");
    app->add_option("--eta", eta, "IoU threshold for easy pairs");
    app->add_option("--sampling", sampling, "key-sample strategy")
        ->check(CLI::IsMember({"center", "center+vertices", "center+boundary_mid", "center+vertices+boundary_mid"}));
    app->add_option("--grouping", grouping, "category grouping for pair evaluation")
        ->check(CLI::IsMember({"collision_cost", "cbgs_groups", "none"}));
    app->add_option("--weight-seed", weight_seed, "seed for projection and context weights");
    app->add_option("--squeeze-weights", squeeze_weights, "PROJ file mapping LiDAR instances to camera channels");
    app->add_option("--excitation-weights", excitation_weights, "PROJ file mapping camera instances to LiDAR channels");
    app->add_option("--readout-threshold", readout_threshold, "energy threshold of the readout detector");
  }

  void apply(PipelineConfig& c) const {
    if (gamma) c.gamma = *gamma;
    if (eta) c.eta = *eta;
    if (sampling) c.sampling = *strategy_from_name(*sampling);
    if (grouping) c.grouping = *grouping_from_name(*grouping);
    if (weight_seed) c.weight_seed = *weight_seed;
    if (squeeze_weights) c.squeeze_weights = *squeeze_weights;
    if (excitation_weights) c.excitation_weights = *excitation_weights;
    if (readout_threshold) c.readout.threshold = *readout_threshold;
  }
};

struct LoadedScene {
  io::SceneManifest manifest;
  BevGrid lidar;
  BevGrid camera;
  std::vector<Proposal> lidar_proposals;
  std::vector<Proposal> camera_proposals;
};

LoadedScene load_scene(const fs::path& manifest_path) {
  LoadedScene s;
  s.manifest = io::load_manifest(manifest_path);
  s.lidar = io::load_grid(s.manifest.lidar_grid);
  s.camera = io::load_grid(s.manifest.camera_grid);
  s.lidar_proposals = io::load_proposals(s.manifest.lidar_proposals);
  s.camera_proposals = io::load_proposals(s.manifest.camera_proposals);
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw ParseError("cannot write " + path.string());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  log::configure_from_env();

  CLI::App app{"Dual-guided LiDAR/camera BEV fusion toolkit", "bevfuse"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<int> threads;
  app.add_option("--config", config_path, "pipeline config JSON; flags override its values")->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "worker threads (1 = serial)")->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "synthesize a seeded scene");
  std::string gen_out;
  scene::GenConfig gen_cfg;
  std::string profile = "easy";
  int lidar_channels = gen_cfg.lidar_spec.channels;
  int camera_channels = gen_cfg.camera_spec.channels;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  gen->add_option("--objects", gen_cfg.n_objects, "number of objects");
  gen->add_option("--profile", profile, "object mix")->check(CLI::IsMember({"easy", "mixed", "lidar-hole", "occluded"}));
  gen->add_option("--lidar-channels", lidar_channels, "LiDAR grid channels")->check(CLI::PositiveNumber);
  gen->add_option("--camera-channels", camera_channels, "camera grid channels")->check(CLI::PositiveNumber);
  gen->add_option("--background-points", gen_cfg.background_points, "clutter LiDAR returns outside objects");
  gen->add_option("--noise", gen_cfg.background_noise, "Gaussian feature noise added to every grid value");

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "run matching, both enhancements and fusion");
  std::string fuse_scene;
  std::string fuse_out;
  bool no_enhance = false;
  Overrides fuse_ov;
  fuse_cmd->add_option("--scene", fuse_scene, "scene manifest")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--out", fuse_out, "output directory")->required();
  fuse_cmd->add_flag("--no-enhance", no_enhance, "fuse the original grids");
  fuse_ov.attach(fuse_cmd);

  // match
  auto* match_cmd = app.add_subcommand("match", "run instance generation and pair matching only");
  std::string match_scene;
  std::string match_out;
  Overrides match_ov;
  match_cmd->add_option("--scene", match_scene, "scene manifest")->required()->check(CLI::ExistingFile);
  match_cmd->add_option("--out", match_out, "pair dump path (default: stdout)");
  match_ov.attach(match_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "stratified detection metrics");
  std::string eval_dets;
  std::string eval_anns;
  std::string eval_scene;
  std::string eval_axis = "distance";
  std::string eval_out;
  eval_cmd->add_option("--detections", eval_dets, "detections JSONL")->required()->check(CLI::ExistingFile);
  auto* ann_opt = eval_cmd->add_option("--annotations", eval_anns, "annotations JSONL")->check(CLI::ExistingFile);
  auto* scene_opt = eval_cmd->add_option("--scene", eval_scene, "scene manifest")->check(CLI::ExistingFile);
  ann_opt->excludes(scene_opt);
  eval_cmd->add_option("--axis", eval_axis, "stratification axis")
      ->check(CLI::IsMember({"distance", "visibility", "size"}));
  eval_cmd->add_option("--out", eval_out, "JSON report path");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "visibility token x LiDAR point count histogram");
  std::string stats_anns;
  std::string stats_scene;
  std::string stats_points;
  std::string stats_format = "table";
  std::string stats_out;
  auto* s_ann = stats_cmd->add_option("--annotations", stats_anns, "annotations JSONL")->check(CLI::ExistingFile);
  auto* s_scene = stats_cmd->add_option("--scene", stats_scene, "scene manifest")->check(CLI::ExistingFile);
  s_ann->excludes(s_scene);
  stats_cmd->add_option("--points", stats_points, "PNTS point cloud (counts points per box)")
      ->check(CLI::ExistingFile);
  stats_cmd->add_option("--format", stats_format, "output format")->check(CLI::IsMember({"table", "json", "csv"}));
  stats_cmd->add_option("--out", stats_out, "output path (default: stdout)");

  // loss
  auto* loss_cmd = app.add_subcommand("loss", "loss components of the fused scene");
  std::string loss_scene;
  std::string loss_history;
  Overrides loss_ov;
  loss_cmd->add_option("--scene", loss_scene, "scene manifest")->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--history", loss_history, "JSON file carrying the running cosine-loss maximum");
  loss_ov.attach(loss_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    PipelineConfig config;
    if (!config_path.empty()) {
      config = PipelineConfig::from_json(io::read_json(config_path), fs::path(config_path).parent_path());
    }
    if (threads) config.threads = *threads;

    if (*gen) {
      gen_cfg.profile = *scene::GapProfile::from_name(profile);
      gen_cfg.lidar_spec.channels = lidar_channels;
      gen_cfg.camera_spec.channels = camera_channels;
      if (config.grid) {
        gen_cfg.lidar_spec = {config.grid->height, config.grid->width, lidar_channels, config.grid->x_min,
                              config.grid->x_max,  config.grid->y_min, config.grid->y_max};
        gen_cfg.camera_spec = gen_cfg.lidar_spec;
        gen_cfg.camera_spec.channels = camera_channels;
      }
      const auto sc = scene::generate(gen_cfg);
      scene::write_scene(sc, gen_cfg, gen_out);
      out << (fs::path(gen_out) / "manifest.json").generic_string() << '\n';
    } else if (*fuse_cmd) {
      fuse_ov.apply(config);
      if (no_enhance) config.enhance = false;
      const auto s = load_scene(fuse_scene);
      const auto r = run_fusion(s.lidar, s.camera, s.lidar_proposals, s.camera_proposals, config);
      const fs::path dir = fuse_out;
      fs::create_directories(dir);
      io::save_grid(dir / "enhanced_camera.bevg", r.enhanced_camera);
      io::save_grid(dir / "enhanced_lidar.bevg", r.enhanced_lidar);
      io::save_grid(dir / "fused.bevg", r.fused);
      io::write_json(dir / "pairs.json", io::pairs_to_json(r.pairs, r.lidar.instances, r.camera.instances));
      const auto dets = readout_detect(r.fused, s.lidar_proposals, s.camera_proposals, config.readout);
      io::save_detections(dir / "detections.jsonl", dets);
      out << fmt::format("{} EIP, {} C-HIP, {} L-HIP; {} detections\n", r.pairs.eip.size(), r.pairs.c_hip.size(),
                         r.pairs.l_hip.size(), dets.size());
    } else if (*match_cmd) {
      match_ov.apply(config);
      const auto s = load_scene(match_scene);
      const auto m = run_matching(s.lidar, s.camera, s.lidar_proposals, s.camera_proposals, config);
      const json dump = io::pairs_to_json(m.pairs, m.lidar.instances, m.camera.instances);
      if (match_out.empty()) {
        out << dump.dump(2) << '\n';
      } else {
        io::write_json(match_out, dump);
      }
    } else if (*eval_cmd) {
      if (eval_anns.empty() && eval_scene.empty()) throw ConfigError("eval needs --annotations or --scene");
      const auto anns = io::load_annotations(eval_anns.empty() ? io::load_manifest(eval_scene).annotations
                                                               : fs::path(eval_anns));
      const auto dets = io::load_detections(eval_dets);
      const auto report = stratified_eval(dets, anns, *axis_from_name(eval_axis));
      if (!eval_out.empty()) io::write_json(eval_out, io::report_to_json(report));
      out << io::report_to_table(report);
    } else if (*stats_cmd) {
      if (stats_anns.empty() && stats_scene.empty()) throw ConfigError("stats needs --annotations or --scene");
      fs::path ann_path = stats_anns;
      fs::path pts_path = stats_points;
      if (!stats_scene.empty()) {
        const auto m = io::load_manifest(stats_scene);
        ann_path = m.annotations;
        if (pts_path.empty()) pts_path = m.points;
      }
      const auto anns = io::load_annotations(ann_path);
      std::optional<std::vector<Vec3>> pts;
      if (!pts_path.empty()) pts = io::load_points(pts_path);
      const auto h = pts ? visibility_histogram(anns, std::span<const Vec3>(*pts)) : visibility_histogram(anns);
      const std::string text = stats_format == "json"  ? io::histogram_to_json(h).dump(2) + "\n"
                               : stats_format == "csv" ? io::histogram_to_csv(h)
                                                       : io::histogram_to_table(h);
      if (stats_out.empty()) {
        out << text;
      } else {
        write_text(stats_out, text);
      }
    } else if (*loss_cmd) {
      loss_ov.apply(config);
      const auto s = load_scene(loss_scene);
      const auto anns = io::load_annotations(s.manifest.annotations);
      CosHistory history;
      if (!loss_history.empty() && fs::exists(loss_history)) {
        history.max_seen = io::read_json(loss_history).at("max_seen").get<double>();
      }
      const auto r = run_fusion(s.lidar, s.camera, s.lidar_proposals, s.camera_proposals, config);
      const auto b = pipeline_losses(r, s.lidar, s.camera, anns, config, history);
      if (!loss_history.empty()) io::write_json(loss_history, json{{"max_seen", history.max_seen}});
      const json j = {{"head", b.head},         {"lidar", b.lidar},
                      {"camera", b.camera},     {"cos", b.cos},
                      {"cos_from_history", b.cos_from_history}, {"total", b.total}};
      out << j.dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ContractError& e) {
    log::error("internal contract violated: {}", e.what());
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace bevfuse
