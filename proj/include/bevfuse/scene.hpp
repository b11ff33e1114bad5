#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/eval.hpp"
#include "bevfuse/ifg.hpp"
#include "bevfuse/io.hpp"

// Seeded synthetic scenes with a controllable per-object information density
// gap between the two modalities.
//
// Every object imprints an anisotropic Gaussian bump on each grid, aligned with
// its box, with sigma equal to the half-extent along each box axis (floored at
// half a cell so sub-cell objects still register). The bump carries a
// per-object channel signature (a fixed per-class embedding plus 30% noise)
// scaled by the modality amplitude and the object's strength in that modality.
// LiDAR features have a larger amplitude than camera features.
//
// Objects never overlap in BEV: placements keep a clearance between
// circumscribed circles, so LiDAR points sampled inside one box are never
// inside another and the per-object point counts are exact.
namespace bevfuse::scene {

enum class ObjectKind { easy, lidar_hole, occluded };

std::string_view kind_name(ObjectKind k);

// Fractions of each object kind; normalized internally.
struct GapProfile {
  double easy = 1.0;
  double lidar_hole = 0.0;
  double occluded = 0.0;

  static std::optional<GapProfile> from_name(std::string_view name);
};

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t n_objects = 12;
  GapProfile profile;
  GridSpec lidar_spec{180, 180, 32};
  GridSpec camera_spec{180, 180, 32};
  double lidar_amplitude = 3.0;
  double camera_amplitude = 0.7;
  double background_noise = 0.0;
  double placement_extent = 50.0;  // objects are placed with |x|, |y| <= this
  std::size_t background_points = 2000;
};

struct SceneObject {
  Annotation annotation;
  ObjectKind kind = ObjectKind::easy;
  double lidar_strength = 0.0;
  double camera_strength = 0.0;
  std::size_t points_placed = 0;
};

struct Scene {
  BevGrid lidar_grid;
  BevGrid camera_grid;
  std::vector<Proposal> lidar_proposals;
  std::vector<Proposal> camera_proposals;
  std::vector<SceneObject> objects;
  std::vector<Vec3> points;

  std::vector<Annotation> annotations() const;
};

Scene generate(const GenConfig& config);

// Writes grids, proposals, annotations, points, an objects.jsonl bookkeeping
// file and manifest.json into `dir`; returns the manifest.
io::SceneManifest write_scene(const Scene& scene, const GenConfig& config, const std::filesystem::path& dir);

}  // namespace bevfuse::scene
