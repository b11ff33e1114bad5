#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bevfuse/eval.hpp"
#include "bevfuse/scene.hpp"
#include "support.hpp"

using namespace bevfuse;
using namespace testing_support;

namespace {

Annotation gt(double x, double y, int cls = 0, double w = 2, double l = 2, int vis = 4, double h = 1.5) {
  return {make_box(x, y, w, l, 0.0, h), cls, vis, 0};
}

Detection det(double x, double y, double score, int cls = 0, double w = 2, double l = 2, double h = 1.5) {
  return {make_box(x, y, w, l, 0.0, h), cls, score};
}

// Fixture values come from tests/fixtures/derive_metric_fixture.py.
const std::vector<Annotation> kApGts{gt(0, 0), gt(10, 0), gt(20, 0)};
const std::vector<Detection> kApDets{det(0.3, 0, 0.9), det(50, 0, 0.8), det(10, 0.8, 0.7), det(21.5, 0, 0.6)};

struct RandomScene {
  std::vector<Annotation> gts;
  std::vector<Detection> dets;
};

RandomScene random_scene(Rng& rng, int max_objects = 10) {
  RandomScene s;
  for (int i = rng.uniform_int(0, max_objects); i > 0; --i) {
    const double r = rng.uniform(1, 60);
    const double a = rng.uniform(-3.14159, 3.14159);
    Annotation g = gt(r * std::cos(a), r * std::sin(a), rng.uniform_int(0, 2), rng.uniform(1, 4), rng.uniform(1, 8),
                      rng.uniform_int(1, 4), rng.uniform(1, 3));
    g.box.yaw = rng.uniform(-3.14159, 3.14159);
    s.gts.push_back(g);
    if (rng.uniform() < 0.8) {
      Detection d{g.box, rng.uniform() < 0.9 ? g.class_id : rng.uniform_int(0, 2), rng.uniform()};
      d.box.center.x += rng.normal(0, 1.0);
      d.box.center.y += rng.normal(0, 1.0);
      d.box.yaw += rng.normal(0, 0.2);
      s.dets.push_back(d);
    }
  }
  for (int i = rng.uniform_int(0, 4); i > 0; --i) {
    s.dets.push_back(det(rng.uniform(-60, 60), rng.uniform(-60, 60), rng.uniform(), rng.uniform_int(0, 2)));
  }
  return s;
}

void check_same_map(const MapResult& a, const MapResult& b) {
  CHECK(a.map == b.map);
  CHECK(a.classes_evaluated == b.classes_evaluated);
  CHECK(a.per_class == b.per_class);
}

}  // namespace

TEST_CASE("single detection AP") {
  const std::vector<Annotation> g{gt(5, 5)};
  const std::vector<Detection> near{det(5.3, 5, 0.5)};
  const std::vector<Detection> far{det(10, 5, 0.5)};
  for (double thr : kDistanceThresholds) CHECK(*average_precision(near, g, 0, thr) == 1.0);
  CHECK(*average_precision(far, g, 0, 4.0) == 0.0);
  CHECK(*average_precision({}, g, 0, 4.0) == 0.0);
  CHECK(*average_precision(near, {}, 0, 4.0) == 0.0);
  CHECK_FALSE(average_precision({}, {}, 0, 4.0).has_value());
  CHECK_FALSE(average_precision(near, g, 3, 4.0).has_value());
}

TEST_CASE("hand-enumerated 3-GT / 4-detection scene") {
  CHECK(*average_precision(kApDets, kApGts, 0, 0.5) == doctest::Approx(34.0 / 101).epsilon(1e-14));
  CHECK(*average_precision(kApDets, kApGts, 0, 1.0) == doctest::Approx(56.0 / 101).epsilon(1e-14));
  CHECK(*average_precision(kApDets, kApGts, 0, 2.0) == doctest::Approx(337.0 / 404).epsilon(1e-14));
  CHECK(*average_precision(kApDets, kApGts, 0, 4.0) == doctest::Approx(337.0 / 404).epsilon(1e-14));
  const auto m = map_over_thresholds(kApDets, kApGts);
  CHECK(m.classes_evaluated == 1);
  CHECK(m.map == doctest::Approx((34.0 / 101 + 56.0 / 101 + 2 * 337.0 / 404) / 4).epsilon(1e-14));

  // Recall scene: 2x2 squares; an x offset of s gives IoU (2 - s) / (2 + s).
  const std::vector<Annotation> rg{gt(0, 0), gt(10, 0), gt(20, 0)};
  const std::vector<Detection> rd{det(0.5, 0, 0.9), det(0, 0, 0.8), det(11, 0, 0.7)};
  const auto r = recall_at_iou(rd, rg, kRecallIouThresholds);
  CHECK(r[0] == doctest::Approx(2.0 / 3));
  CHECK(r[1] == doctest::Approx(1.0 / 3));
  CHECK(r[2] == doctest::Approx(1.0 / 3));
}

TEST_CASE("perfect and empty predictions") {
  std::vector<Annotation> gts{gt(3, 4, 0), gt(-10, 2, 1), gt(30, -30, 2, 2, 5)};
  std::vector<Detection> dets;
  for (const auto& g : gts) dets.push_back({g.box, g.class_id, 0.8});
  CHECK(map_over_thresholds(dets, gts).map == 1.0);
  CHECK(recall_at_iou(dets, gts, kRecallIouThresholds) == std::vector<double>{1, 1, 1});
  CHECK(map_over_thresholds({}, gts).map == 0.0);
  CHECK(recall_at_iou({}, gts, kRecallIouThresholds) == std::vector<double>{0, 0, 0});
  CHECK(recall_at_iou(dets, {}, kRecallIouThresholds) == std::vector<double>{0, 0, 0});
}

TEST_CASE("bins along each axis") {
  CHECK(bin_of(Axis::distance, make_box(10, 10, 1, 1)) == 0);
  CHECK(bin_of(Axis::distance, make_box(20, 0, 1, 1)) == 1);
  CHECK(bin_of(Axis::distance, make_box(0, -39.9, 1, 1)) == 1);
  CHECK(bin_of(Axis::distance, make_box(40, 0, 1, 1)) == 2);
  CHECK(bin_of(Axis::size, make_box(0, 0, 2, 2, 0, 3)) == 1);  // 12 m3
  CHECK(bin_of(Axis::size, make_box(0, 0, 1, 1, 0, 9.99)) == 0);
  CHECK(bin_of(Axis::size, make_box(0, 0, 3, 10, 0, 1)) == 2);
  CHECK(bin_of(gt(0, 0, 0, 2, 2, 4), Axis::visibility) == 0);
  CHECK(bin_of(gt(0, 0, 0, 2, 2, 2), Axis::visibility) == 1);
  for (Axis a : {Axis::distance, Axis::visibility, Axis::size}) CHECK(axis_from_name(axis_name(a)) == a);
  CHECK_FALSE(axis_from_name("height").has_value());
}

TEST_CASE("stratified ground truth partitions the input") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_scene(rng, 20);
    for (Axis a : {Axis::distance, Axis::visibility, Axis::size}) {
      const auto bins = stratify(s.gts, a);
      std::size_t total = 0;
      for (std::size_t b = 0; b < bins.size(); ++b) {
        total += bins[b].size();
        for (const auto& g : bins[b]) CHECK(bin_of(g, a) == b);
      }
      CHECK(total == s.gts.size());
      // Each input annotation appears in exactly one bin, once.
      for (const auto& g : s.gts) {
        std::size_t hits = 0;
        for (const auto& bin : bins) {
          hits += static_cast<std::size_t>(std::count_if(bin.begin(), bin.end(), [&](const Annotation& x) {
            return x.box.center.x == g.box.center.x && x.box.center.y == g.box.center.y;
          }));
        }
        CHECK(hits == 1);
      }
    }
  }
}

TEST_CASE("stratified eval equals metrics on pre-filtered inputs") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = random_scene(rng, 15);
    const auto dist = stratified_eval(s.dets, s.gts, Axis::distance);
    REQUIRE(dist.bins.size() == 3);
    const double edges[] = {0, 20, 40, 1e300};
    for (std::size_t b = 0; b < 3; ++b) {
      std::vector<Annotation> g;
      std::vector<Detection> d;
      for (const auto& x : s.gts) {
        const double r = std::sqrt(x.box.center.x * x.box.center.x + x.box.center.y * x.box.center.y);
        if (r >= edges[b] && r < edges[b + 1]) g.push_back(x);
      }
      for (const auto& x : s.dets) {
        const double r = std::sqrt(x.box.center.x * x.box.center.x + x.box.center.y * x.box.center.y);
        if (r >= edges[b] && r < edges[b + 1]) d.push_back(x);
      }
      check_same_map(dist.bins[b].map, map_over_thresholds(d, g));
      CHECK(dist.bins[b].recall == recall_at_iou(d, g, kRecallIouThresholds));
      CHECK(dist.bins[b].has_data == !g.empty());
    }

    const auto vis = stratified_eval(s.dets, s.gts, Axis::visibility);
    REQUIRE(vis.bins.size() == 2);
    std::vector<Annotation> full;
    std::vector<Annotation> partial;
    for (const auto& x : s.gts) (x.visibility == 4 ? full : partial).push_back(x);
    check_same_map(vis.bins[0].map, map_over_thresholds(s.dets, full));
    check_same_map(vis.bins[1].map, map_over_thresholds(s.dets, partial));
    CHECK(vis.bins[1].recall == recall_at_iou(s.dets, partial, kRecallIouThresholds));
    check_same_map(vis.overall.map, map_over_thresholds(s.dets, s.gts));
  }
}

TEST_CASE("single-bin data equals the unstratified metrics; empty bins are marked") {
  const std::vector<Annotation> g{gt(3, 4), gt(-5, 2, 1)};
  const std::vector<Detection> d{det(3.2, 4, 0.9), det(-5, 2.5, 0.3, 1), det(8, 8, 0.5)};
  const auto r = stratified_eval(d, g, Axis::distance);
  check_same_map(r.bins[0].map, r.overall.map);
  CHECK(r.bins[0].recall == r.overall.recall);
  CHECK_FALSE(r.bins[1].has_data);
  CHECK_FALSE(r.bins[2].has_data);
}

TEST_CASE("metrics tighten monotonically with the threshold") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_scene(rng, 12);
    for (int c = 0; c < 3; ++c) {
      std::optional<double> prev;
      for (auto it = kDistanceThresholds.rbegin(); it != kDistanceThresholds.rend(); ++it) {
        const auto ap = average_precision(s.dets, s.gts, c, *it);
        if (prev && ap) CHECK(*ap <= *prev + 1e-12);
        prev = ap;
      }
    }
    const auto r = recall_at_iou(s.dets, s.gts, kRecallIouThresholds);
    CHECK(r[1] <= r[0]);
    CHECK(r[2] <= r[1]);
  }
}

TEST_CASE("a duplicate can claim a second ground truth when boxes crowd") {
  // Both GTs lie within 4 m of the detection, so its copy takes the other one.
  const std::vector<Annotation> g{gt(0, 0), gt(3, 0)};
  const std::vector<Detection> once{det(1.4, 0, 0.9)};
  auto twice = once;
  twice.push_back(once[0]);
  CHECK(*average_precision(twice, g, 0, 4.0) > *average_precision(once, g, 0, 4.0));
}

TEST_CASE("duplicating detections and scaling scores") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_scene(rng, 12);
    // Keep ground truth far enough apart that no detection can reach two of them.
    std::vector<Annotation> spread;
    for (const auto& g : s.gts) {
      if (std::all_of(spread.begin(), spread.end(),
                      [&](const Annotation& k) { return center_distance_bev(k.box, g.box) > 20.0; })) {
        spread.push_back(g);
      }
    }
    s.gts = spread;
    auto doubled = s.dets;
    doubled.insert(doubled.end(), s.dets.begin(), s.dets.end());
    CHECK(recall_at_iou(doubled, s.gts, kRecallIouThresholds) == recall_at_iou(s.dets, s.gts, kRecallIouThresholds));
    for (int c = 0; c < 3; ++c) {
      for (double thr : kDistanceThresholds) {
        const auto a = average_precision(s.dets, s.gts, c, thr);
        const auto b = average_precision(doubled, s.gts, c, thr);
        if (a) CHECK(*b <= *a + 1e-12);
      }
    }
    auto scaled = s.dets;
    const double k = rng.uniform(0.1, 0.99);
    for (auto& d : scaled) d.score *= k;
    for (Axis a : {Axis::distance, Axis::visibility, Axis::size}) {
      const auto x = stratified_eval(s.dets, s.gts, a);
      const auto y = stratified_eval(scaled, s.gts, a);
      check_same_map(x.overall.map, y.overall.map);
      CHECK(x.overall.recall == y.overall.recall);
      for (std::size_t b = 0; b < x.bins.size(); ++b) {
        check_same_map(x.bins[b].map, y.bins[b].map);
        CHECK(x.bins[b].recall == y.bins[b].recall);
      }
    }
  }
}

TEST_CASE("point buckets and stored-count histogram") {
  CHECK(point_bucket(0) == 0);
  CHECK(point_bucket(1) == 1);
  CHECK(point_bucket(4) == 2);
  CHECK(point_bucket(5) == 3);
  CHECK(point_bucket(49) == 4);
  CHECK(point_bucket(50) == 5);
  CHECK(visibility_histogram({}) == VisibilityHistogram{});
  std::vector<Annotation> a{gt(0, 0, 0, 2, 2, 3), gt(5, 0, 0, 2, 2, 4), gt(9, 0, 0, 2, 2, 4)};
  a[1].num_lidar_pts = 7;
  a[2].num_lidar_pts = 120;
  const auto h = visibility_histogram(a);
  CHECK(h.counts[2][0] == 1);
  CHECK(h.counts[3][3] == 1);
  CHECK(h.counts[3][5] == 1);
}

TEST_CASE("histogram matches generator bookkeeping on seeded scenes") {
  for (std::uint64_t seed : {1u, 7u, 42u, 99u}) {
    scene::GenConfig cfg;
    cfg.seed = seed;
    cfg.n_objects = 20;
    cfg.profile = *scene::GapProfile::from_name("mixed");
    cfg.lidar_spec = {60, 60, 4, -54, 54, -54, 54};
    cfg.camera_spec = {60, 60, 4, -54, 54, -54, 54};
    const auto sc = scene::generate(cfg);
    VisibilityHistogram expect;
    for (const auto& o : sc.objects) {
      ++expect.counts[static_cast<std::size_t>(o.annotation.visibility - 1)][point_bucket(o.points_placed)];
      CHECK(points_in_box(sc.points, o.annotation.box) == o.points_placed);
    }
    const auto anns = sc.annotations();
    CHECK(visibility_histogram(anns, std::span<const Vec3>(sc.points)) == expect);
    CHECK(visibility_histogram(anns) == expect);
  }
}
