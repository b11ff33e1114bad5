#include "bevfuse/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "bevfuse/error.hpp"
#include "bevfuse/random.hpp"

namespace bevfuse::scene {
namespace {

// Typical (w along heading, l lateral, h) per class, meters.
constexpr std::array<BoxSize, kNumClasses> kClassSize{{
    {4.6, 1.9, 1.7},   // car
    {6.9, 2.5, 2.8},   // truck
    {6.4, 2.8, 3.2},   // construction vehicle
    {11.0, 2.9, 3.5},  // bus
    {12.0, 2.9, 3.9},  // trailer
    {0.5, 2.5, 1.0},   // barrier
    {2.1, 0.8, 1.5},   // motorcycle
    {1.7, 0.6, 1.3},   // bicycle
    {0.7, 0.7, 1.8},   // pedestrian
    {0.4, 0.4, 1.1},   // traffic cone
}};

constexpr std::uint64_t kSignatureSeed = 0x5eed'c1a5'5e00'0001ULL;
constexpr double kSignatureNoise = 0.3;
constexpr double kClearance = 1.5;

std::vector<std::vector<double>> class_signatures(int channels, std::uint64_t salt) {
  Rng rng(kSignatureSeed ^ salt);
  std::vector<std::vector<double>> sig(kNumClasses, std::vector<double>(static_cast<std::size_t>(channels)));
  for (auto& s : sig) {
    for (auto& v : s) v = rng.normal();
  }
  return sig;
}

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void imprint(BevGrid& grid, const Box3D& box, std::span<const double> signature, double scale) {
  const GridSpec& spec = grid.spec();
  const double half_cell = 0.5 * std::min(spec.cell_size_x(), spec.cell_size_y());
  const double sx = std::max(0.5 * box.size.w, half_cell);
  const double sy = std::max(0.5 * box.size.l, half_cell);
  const double reach = 3.0 * std::max(sx, sy);
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const GridCoord lo = absl_to_rela({box.center.x - reach, box.center.y - reach}, spec);
  const GridCoord hi = absl_to_rela({box.center.x + reach, box.center.y + reach}, spec);
  const int r0 = std::max(0, static_cast<int>(std::floor(lo.row)));
  const int r1 = std::min(spec.height - 1, static_cast<int>(std::ceil(hi.row)));
  const int c0 = std::max(0, static_cast<int>(std::floor(lo.col)));
  const int c1 = std::min(spec.width - 1, static_cast<int>(std::ceil(hi.col)));
  for (int r = r0; r <= r1; ++r) {
    for (int col = c0; col <= c1; ++col) {
      const Vec2 p = rela_to_absl({static_cast<double>(r), static_cast<double>(col)}, spec);
      const double dx = p.x - box.center.x;
      const double dy = p.y - box.center.y;
      const double lx = dx * c + dy * s;
      const double ly = -dx * s + dy * c;
      const double g = std::exp(-0.5 * (lx * lx / (sx * sx) + ly * ly / (sy * sy)));
      if (g < 1e-6) continue;
      auto cell = grid.cell(r, col);
      for (std::size_t k = 0; k < cell.size(); ++k) cell[k] += scale * g * signature[k];
    }
  }
}

// Proposal regression noise, scaled to the object so that two proposals of
// the same easy object stay well above the pairing IoU threshold.
Box3D jitter_box(const Box3D& box, Rng& rng) {
  Box3D b = box;
  const double s = 0.02 * std::min(box.size.w, box.size.l);
  b.center.x += rng.normal(0.0, s);
  b.center.y += rng.normal(0.0, s);
  b.center.z += rng.normal(0.0, 0.05);
  b.size.w *= 1.0 + std::clamp(rng.normal(0.0, 0.01), -0.03, 0.03);
  b.size.l *= 1.0 + std::clamp(rng.normal(0.0, 0.01), -0.03, 0.03);
  b.size.h *= 1.0 + std::clamp(rng.normal(0.0, 0.01), -0.03, 0.03);
  b.yaw = normalize_yaw(b.yaw + std::clamp(rng.normal(0.0, 0.01), -0.03, 0.03));
  return b;
}

int visibility_token(double camera_strength) {
  if (camera_strength >= 0.8) return 4;
  if (camera_strength >= 0.6) return 3;
  if (camera_strength >= 0.4) return 2;
  return 1;
}

std::size_t lidar_point_count(const Box3D& box, double lidar_strength) {
  const double area = box.size.w * box.size.l;
  const double base = 5.0 + 60.0 * std::min(1.0, area / 8.0);
  const double range = std::hypot(box.center.x, box.center.y);
  return static_cast<std::size_t>(std::floor(lidar_strength * lidar_strength * base / (1.0 + range / 30.0)));
}

Vec3 point_inside(const Box3D& box, Rng& rng) {
  // 5% inset keeps f32 rounding from pushing points onto the boundary.
  const double lx = rng.uniform(-0.45, 0.45) * box.size.w;
  const double ly = rng.uniform(-0.45, 0.45) * box.size.l;
  const double lz = rng.uniform(-0.45, 0.45) * box.size.h;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return {box.center.x + lx * c - ly * s, box.center.y + lx * s + ly * c, box.center.z + lz};
}

Vec3 round_point(Vec3 p) { return {to_f32(p.x), to_f32(p.y), to_f32(p.z)}; }

}  // namespace

std::string_view kind_name(ObjectKind k) {
  switch (k) {
    case ObjectKind::easy: return "easy";
    case ObjectKind::lidar_hole: return "lidar-hole";
    case ObjectKind::occluded: return "occluded";
  }
  return "unknown";
}

std::optional<GapProfile> GapProfile::from_name(std::string_view name) {
  if (name == "easy") return GapProfile{1.0, 0.0, 0.0};
  if (name == "lidar-hole") return GapProfile{0.0, 1.0, 0.0};
  if (name == "occluded") return GapProfile{0.0, 0.0, 1.0};
  if (name == "mixed") return GapProfile{0.4, 0.3, 0.3};
  return std::nullopt;
}

std::vector<Annotation> Scene::annotations() const {
  std::vector<Annotation> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.annotation);
  return out;
}

Scene generate(const GenConfig& config) {
  config.lidar_spec.validate();
  config.camera_spec.validate();
  if (!config.lidar_spec.same_window(config.camera_spec)) throw ConfigError("generator grids must share one window");
  const double total = config.profile.easy + config.profile.lidar_hole + config.profile.occluded;
  if (!(total > 0.0) || config.profile.easy < 0.0 || config.profile.lidar_hole < 0.0 || config.profile.occluded < 0.0) {
    throw ConfigError("gap profile fractions must be non-negative with a positive sum");
  }

  Rng rng(config.seed);
  Scene scene;
  scene.lidar_grid = BevGrid(config.lidar_spec);
  scene.camera_grid = BevGrid(config.camera_spec);
  const auto lidar_sig = class_signatures(config.lidar_spec.channels, 1);
  const auto camera_sig = class_signatures(config.camera_spec.channels, 2);

  // Placement.
  const double extent = std::min({config.placement_extent, config.lidar_spec.x_max, -config.lidar_spec.x_min,
                                  config.lidar_spec.y_max, -config.lidar_spec.y_min});
  std::vector<Box3D> boxes;
  std::vector<int> classes;
  for (std::size_t n = 0; n < config.n_objects; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int cls = rng.uniform_int(0, kNumClasses - 1);
      const double scale = rng.uniform(0.9, 1.1);
      Box3D b;
      b.size = {kClassSize[static_cast<std::size_t>(cls)].w * scale, kClassSize[static_cast<std::size_t>(cls)].l * scale,
                kClassSize[static_cast<std::size_t>(cls)].h * scale};
      b.center = {rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-1.0, 0.5)};
      b.yaw = normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
      b.velocity = {rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)};
      const double rb = 0.5 * std::hypot(b.size.w, b.size.l);
      const bool clear = std::none_of(boxes.begin(), boxes.end(), [&](const Box3D& o) {
        const double ro = 0.5 * std::hypot(o.size.w, o.size.l);
        return center_distance_bev(o, b) < rb + ro + kClearance;
      });
      if (clear) {
        boxes.push_back(b);
        classes.push_back(cls);
        placed = true;
      }
    }
    if (!placed) throw ConfigError("could not place all objects without overlap; reduce the object count");
  }

  for (std::size_t n = 0; n < boxes.size(); ++n) {
    SceneObject obj;
    const double u = rng.uniform() * total;
    obj.kind = u < config.profile.easy                               ? ObjectKind::easy
               : u < config.profile.easy + config.profile.lidar_hole ? ObjectKind::lidar_hole
                                                                     : ObjectKind::occluded;
    const double strong = rng.uniform(0.85, 1.0);
    const double other = rng.uniform(0.85, 1.0);
    const double weak = rng.uniform(0.0, 0.15);
    switch (obj.kind) {
      case ObjectKind::easy: obj.lidar_strength = strong; obj.camera_strength = other; break;
      case ObjectKind::lidar_hole: obj.lidar_strength = weak; obj.camera_strength = strong; break;
      case ObjectKind::occluded: obj.lidar_strength = strong; obj.camera_strength = weak; break;
    }
    const int cls = classes[n];
    obj.annotation.box = boxes[n];
    obj.annotation.class_id = cls;
    obj.annotation.visibility = visibility_token(obj.camera_strength);

    std::vector<double> ls(lidar_sig[static_cast<std::size_t>(cls)]);
    for (auto& v : ls) v += kSignatureNoise * rng.normal();
    std::vector<double> cs(camera_sig[static_cast<std::size_t>(cls)]);
    for (auto& v : cs) v += kSignatureNoise * rng.normal();
    imprint(scene.lidar_grid, boxes[n], ls, config.lidar_amplitude * obj.lidar_strength);
    imprint(scene.camera_grid, boxes[n], cs, config.camera_amplitude * obj.camera_strength);

    auto proposal = [&](double strength, Modality m) {
      Proposal p;
      p.box = jitter_box(boxes[n], rng);
      p.score = std::clamp(strength + std::clamp(rng.normal(0.0, 0.03), -0.1, 0.1), 0.0, 1.0);
      p.class_id = cls;
      p.modality = m;
      return p;
    };
    scene.lidar_proposals.push_back(proposal(obj.lidar_strength, Modality::lidar));
    scene.camera_proposals.push_back(proposal(obj.camera_strength, Modality::camera));

    const std::size_t npts = lidar_point_count(boxes[n], obj.lidar_strength);
    for (std::size_t k = 0; k < npts; ++k) scene.points.push_back(round_point(point_inside(boxes[n], rng)));
    obj.points_placed = npts;
    obj.annotation.num_lidar_pts = static_cast<int>(npts);
    scene.objects.push_back(obj);
  }

  // Low-score clutter proposals; dropped by any reasonable score filter.
  const std::size_t clutter = config.n_objects / 6;
  for (Modality m : {Modality::lidar, Modality::camera}) {
    for (std::size_t k = 0; k < clutter; ++k) {
      Proposal p;
      const int cls = rng.uniform_int(0, kNumClasses - 1);
      p.box.size = kClassSize[static_cast<std::size_t>(cls)];
      p.box.center = {rng.uniform(-extent, extent), rng.uniform(-extent, extent), 0.0};
      p.box.yaw = normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
      p.score = rng.uniform(0.05, 0.5);
      p.class_id = cls;
      p.modality = m;
      (m == Modality::lidar ? scene.lidar_proposals : scene.camera_proposals).push_back(p);
    }
  }

  // Background returns, kept clear of every box.
  if (config.n_objects > 0) {
    for (std::size_t k = 0; k < config.background_points; ++k) {
      const Vec3 p = round_point({rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-2.0, 2.0)});
      const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const Box3D& b) {
        return point_in_rect({p.x, p.y}, project_to_bev(b), 0.1);
      });
      if (!inside) scene.points.push_back(p);
    }
  }

  if (config.background_noise > 0.0) {
    for (auto& v : scene.lidar_grid.data()) v += rng.normal(0.0, config.background_noise);
    for (auto& v : scene.camera_grid.data()) v += rng.normal(0.0, config.background_noise);
  }
  // Grids are stored as f32; keep the in-memory scene identical to its files.
  for (auto& v : scene.lidar_grid.data()) v = to_f32(v);
  for (auto& v : scene.camera_grid.data()) v = to_f32(v);
  for (auto* props : {&scene.lidar_proposals, &scene.camera_proposals}) {
    for (auto& p : *props) {
      p.box.center = {to_f32(p.box.center.x), to_f32(p.box.center.y), to_f32(p.box.center.z)};
    }
  }
  return scene;
}

io::SceneManifest write_scene(const Scene& scene, const GenConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::SceneManifest m;
  m.seed = config.seed;
  m.lidar_spec = scene.lidar_grid.spec();
  m.camera_spec = scene.camera_grid.spec();
  m.lidar_grid = dir / "lidar.bevg";
  m.camera_grid = dir / "camera.bevg";
  m.lidar_proposals = dir / "lidar_proposals.jsonl";
  m.camera_proposals = dir / "camera_proposals.jsonl";
  m.annotations = dir / "annotations.jsonl";
  m.points = dir / "points.pnts";
  io::save_grid(m.lidar_grid, scene.lidar_grid);
  io::save_grid(m.camera_grid, scene.camera_grid);
  io::save_proposals(m.lidar_proposals, scene.lidar_proposals);
  io::save_proposals(m.camera_proposals, scene.camera_proposals);
  const auto annotations = scene.annotations();
  io::save_annotations(m.annotations, annotations);
  io::save_points(m.points, scene.points);

  std::ofstream objects(dir / "objects.jsonl", std::ios::trunc);
  for (const auto& o : scene.objects) {
    io::json j = io::annotation_to_json(o.annotation);
    j["kind"] = std::string(kind_name(o.kind));
    j["lidar_strength"] = o.lidar_strength;
    j["camera_strength"] = o.camera_strength;
    j["points_placed"] = o.points_placed;
    objects << j.dump() << '\n';
  }
  if (!objects) throw ParseError("cannot write " + (dir / "objects.jsonl").string());

  io::save_manifest(dir / "manifest.json", m);
  return m;
}

}  // namespace bevfuse::scene
