#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bevfuse/error.hpp"
#include "bevfuse/io.hpp"
#include "bevfuse/pipeline.hpp"
#include "bevfuse/readout.hpp"
#include "bevfuse/scene.hpp"
#include "support.hpp"

using namespace bevfuse;
using namespace testing_support;

namespace {

scene::Scene small_scene(std::uint64_t seed, const char* profile = "mixed", std::size_t n = 12) {
  scene::GenConfig c;
  c.seed = seed;
  c.n_objects = n;
  c.profile = *scene::GapProfile::from_name(profile);
  c.lidar_spec = {90, 90, 8, -54, 54, -54, 54};
  c.camera_spec = {90, 90, 6, -54, 54, -54, 54};
  c.background_points = 200;
  return scene::generate(c);
}

Proposal prop_at(double x, double y, int cls, Modality m = Modality::lidar) {
  return {make_box(x, y, 2, 1), 0.9, cls, m};
}

}  // namespace

TEST_CASE("energy peaks: threshold, 3x3 maximum and raster tie-break") {
  BevGrid g(GridSpec{5, 5, 1, 0, 5, 0, 5});
  g.cell(1, 1)[0] = 2.0;
  g.cell(1, 2)[0] = 2.0;  // plateau: the earlier cell wins
  g.cell(3, 3)[0] = -1.5;
  g.cell(4, 0)[0] = 0.5;  // energy 0.25 is below the threshold
  const auto peaks = energy_peaks(g, 0.5);
  REQUIRE(peaks.size() == 2);
  CHECK(peaks[0] == CellIndex{1, 1});
  CHECK(peaks[1] == CellIndex{3, 3});
  CHECK(cell_energy(g)[3 * 5 + 3] == 2.25);
  CHECK(energy_probability(1.5, 0.5) == 0.75);
}

TEST_CASE("readout attaches boxes from nearby proposals, one peak per proposal") {
  BevGrid g(GridSpec{10, 10, 2, 0, 10, 0, 10});
  g.cell(2, 2)[0] = 3.0;  // center (2.5, 2.5), energy 4.5
  g.cell(2, 4)[1] = 2.0;  // center (4.5, 2.5), energy 2
  g.cell(8, 8)[0] = 1.0;  // center (8.5, 8.5), energy 0.5 -> needs a lower threshold
  const std::vector<Proposal> lidar{prop_at(3.0, 2.6, 4)};
  const std::vector<Proposal> camera{prop_at(8.0, 8.0, 7, Modality::camera)};
  ReadoutConfig cfg;
  cfg.threshold = 0.4;
  const auto dets = readout_detect(g, lidar, camera, cfg);
  // Both top peaks pick the LiDAR proposal; the stronger keeps it and the other is dropped.
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].class_id == 4);
  CHECK(dets[0].box.center.x == 3.0);
  CHECK(dets[0].score == doctest::Approx(4.5 / 4.9));
  CHECK(dets[1].class_id == 7);
  CHECK(dets[1].box.center.x == 8.0);
  CHECK(dets[1].score == doctest::Approx(0.5 / 0.9));

  // Without proposals every peak becomes a unit box of the first class.
  const auto bare = readout_detect(g, {}, {}, cfg);
  REQUIRE(bare.size() == 3);
  CHECK(bare[1].class_id == 0);
  CHECK(bare[1].box.center.x == 4.5);
  CHECK(bare[1].box.size.w == 1.0);

  cfg.threshold = -1;
  CHECK_THROWS_AS(readout_detect(g, lidar, camera, cfg), ConfigError);
}

TEST_CASE("config JSON round trip, defaults and rejection") {
  const PipelineConfig d;
  CHECK(d.gamma == 0.7);
  CHECK(d.eta == 0.7);
  CHECK(d.lambdas.lambda_head == 0.99);
  CHECK(d.lambdas.lambda_lidar == 1e-4);
  CHECK(d.lambdas.lambda_camera == 1e-4);
  CHECK(d.lambdas.lambda_cos == 1e-2);
  CHECK(d.sampling == SamplingStrategy::center_boundary_mid);
  CHECK(d.grouping == Grouping::cbgs_groups);

  PipelineConfig c;
  c.gamma = 0.5;
  c.eta = 0.3;
  c.sampling = SamplingStrategy::center_vertices;
  c.grouping = Grouping::none;
  c.grid = GridSpec{10, 20, 3, -1, 1, -2, 2};
  c.weight_seed = 5;
  c.threads = 3;
  c.readout.threshold = 0.2;
  c.squeeze_weights = "/tmp/s.proj";
  const auto back = PipelineConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.grid == c.grid);

  CHECK(PipelineConfig::from_json(nlohmann::json::parse(R"({"squeeze_weights":"w.proj"})"), "/cfg")
            .squeeze_weights == std::filesystem::path("/cfg/w.proj"));
  CHECK_THROWS_WITH_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"gama":0.5})")),
                       doctest::Contains("gama"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"gamma":"high"})")), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"eta":1.5})")), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"sampling":"corners"})")), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse("[1]")), ConfigError);
}

TEST_CASE("window mismatch is named") {
  const GridSpec a{90, 90, 8, -54, 54, -54, 54};
  GridSpec b = a;
  b.x_max = 60;
  CHECK_NOTHROW(check_windows(a, GridSpec{90, 90, 3, -54, 54, -54, 54}));
  CHECK_THROWS_WITH_AS(check_windows(a, b), doctest::Contains("window mismatch"), ConfigError);
  const auto s = small_scene(1);
  const BevGrid cam(b);
  CHECK_THROWS_AS(run_fusion(s.lidar_grid, cam, s.lidar_proposals, s.camera_proposals, PipelineConfig{}), ConfigError);
}

TEST_CASE("fusion is deterministic, serial equals parallel, and disabling enhancement passes grids through") {
  const auto s = small_scene(4);
  PipelineConfig cfg;
  const auto a = run_fusion(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, cfg);
  const auto b = run_fusion(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, cfg);
  CHECK(a.fused == b.fused);
  CHECK(a.pairs.eip == b.pairs.eip);
  CHECK(a.fused.channels() == 14);
  CHECK(slice_channels(a.fused, 0, 8) == a.enhanced_lidar);
  CHECK(slice_channels(a.fused, 8, 6) == a.enhanced_camera);
  CHECK_FALSE(a.enhanced_camera == s.camera_grid);

  cfg.threads = 4;
  const auto p = run_fusion(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, cfg);
  CHECK(p.fused == a.fused);

  cfg.threads = 1;
  cfg.enhance = false;
  const auto off = run_fusion(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, cfg);
  CHECK(off.enhanced_camera == s.camera_grid);
  CHECK(off.enhanced_lidar == s.lidar_grid);
  CHECK(off.pairs.eip == a.pairs.eip);
}

TEST_CASE("mixed scenes produce hard pairs of both kinds") {
  std::size_t c_hip = 0;
  std::size_t l_hip = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = small_scene(seed);
    const auto m = run_matching(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, PipelineConfig{});
    c_hip += m.pairs.c_hip.size();
    l_hip += m.pairs.l_hip.size();
    CHECK(m.pairs.eip.size() <= 12);
  }
  CHECK(c_hip > 0);
  CHECK(l_hip > 0);
}

TEST_CASE("weight files override seeded projections and are shape checked") {
  const auto dir = scratch_dir("pipeline_weights");
  const auto s = small_scene(2);
  PipelineConfig cfg;
  io::save_projection(dir / "sq.proj", Projection::zeros(6, 5 * 8));
  io::save_projection(dir / "ex.proj", Projection::zeros(8, 5 * 6));
  cfg.squeeze_weights = dir / "sq.proj";
  cfg.excitation_weights = dir / "ex.proj";
  const auto r = run_fusion(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, cfg);
  CHECK(r.enhanced_camera == s.camera_grid);
  CHECK(r.enhanced_lidar == s.lidar_grid);
  io::save_projection(dir / "bad.proj", Projection::zeros(5, 40));
  cfg.squeeze_weights = dir / "bad.proj";
  CHECK_THROWS_AS(run_fusion(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, cfg), ConfigError);
}

TEST_CASE("pipeline losses") {
  const auto s = small_scene(3);
  const PipelineConfig cfg;
  const auto f = run_fusion(s.lidar_grid, s.camera_grid, s.lidar_proposals, s.camera_proposals, cfg);
  const auto anns = s.annotations();
  const auto targets = center_targets(f.fused.spec(), anns);
  CHECK(std::count(targets.begin(), targets.end(), 1) == static_cast<long>(anns.size()));

  CosHistory h;
  const auto l = pipeline_losses(f, s.lidar_grid, s.camera_grid, anns, cfg, h);
  CHECK(l.head > 0.0);
  CHECK(l.lidar > 0.0);
  CHECK(l.camera > 0.0);
  CHECK(l.cos >= 0.0);
  CHECK(l.cos <= 2.0);
  CHECK_FALSE(l.cos_from_history);
  CHECK(h.max_seen == l.cos);
  CHECK(l.total == doctest::Approx(0.99 * l.head + 1e-4 * l.lidar + 1e-4 * l.camera + 1e-2 * l.cos));
  CHECK(l.head == readout_focal_loss(f.fused, targets, cfg.readout.threshold));

  // A scene without objects has no EIPs and falls back to the history.
  const auto empty = small_scene(3, "mixed", 0);
  const auto fe = run_fusion(empty.lidar_grid, empty.camera_grid, empty.lidar_proposals, empty.camera_proposals, cfg);
  const auto le = pipeline_losses(fe, empty.lidar_grid, empty.camera_grid, {}, cfg, h);
  CHECK(le.cos_from_history);
  CHECK(le.cos == l.cos);
}
