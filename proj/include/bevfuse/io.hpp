#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/dipm.hpp"
#include "bevfuse/dualguide.hpp"
#include "bevfuse/eval.hpp"
#include "bevfuse/ifg.hpp"

// On-disk formats. All binaries are little-endian.
//
//   BEVG grid:   "BEVG" u32 version=1, u32 H, u32 W, u32 C,
//                f64 x_min, f64 x_max, f64 y_min, f64 y_max, H*W*C f32 (row, col, channel)
//   PROJ weights: "PROJ" u32 rows, u32 cols, rows*cols f32 row-major, rows f32 bias
//   PNTS cloud:  "PNTS" u32 version=1, u64 N, N*3 f32 (x, y, z)
//
// Proposals, annotations and detections are JSON lines. Boxes use the keys
// x y z w l h yaw vx vy, with w along the heading and l lateral.
namespace bevfuse::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::uint32_t kGridVersion = 1;
inline constexpr std::uint32_t kPointsVersion = 1;

// Grid values are stored as f32; values that are not representable in f32
// are rounded on save.
void save_grid(const fs::path& path, const BevGrid& grid);
BevGrid load_grid(const fs::path& path);
// Header-only read.
GridSpec read_grid_spec(const fs::path& path);
json grid_sidecar(const GridSpec& spec);
json spec_to_json(const GridSpec& spec);
// Throws json exceptions on missing keys; callers wrap them.
GridSpec spec_from_json(const json& j);
fs::path sidecar_path(const fs::path& grid_path);

void save_projection(const fs::path& path, const Projection& proj);
Projection load_projection(const fs::path& path);

void save_points(const fs::path& path, std::span<const Vec3> points);
std::vector<Vec3> load_points(const fs::path& path);

json box_to_json(const Box3D& box);
Box3D box_from_json(const json& j);

json proposal_to_json(const Proposal& p);
Proposal proposal_from_json(const json& j);
json annotation_to_json(const Annotation& a);
Annotation annotation_from_json(const json& j);
json detection_to_json(const Detection& d);
Detection detection_from_json(const json& j);

void save_proposals(const fs::path& path, std::span<const Proposal> proposals);
std::vector<Proposal> load_proposals(const fs::path& path);
void save_annotations(const fs::path& path, std::span<const Annotation> annotations);
std::vector<Annotation> load_annotations(const fs::path& path);
void save_detections(const fs::path& path, std::span<const Detection> detections);
std::vector<Detection> load_detections(const fs::path& path);

// Pair dump: per pair {kind, anchor_idx, guide_idx, similarity, classes}.
// Indices refer to rows of the proposal files.
json pairs_to_json(const PairSets& sets, std::span<const InstanceFeature> lidar,
                   std::span<const InstanceFeature> camera);

json report_to_json(const StratifiedReport& report);
std::string report_to_table(const StratifiedReport& report);
json histogram_to_json(const VisibilityHistogram& h);
std::string histogram_to_table(const VisibilityHistogram& h);
std::string histogram_to_csv(const VisibilityHistogram& h);

json read_json(const fs::path& path);
// Pretty-printed with a trailing newline.
void write_json(const fs::path& path, const json& j);

struct SceneManifest {
  std::uint64_t seed = 0;
  GridSpec lidar_spec;
  GridSpec camera_spec;
  fs::path lidar_grid;
  fs::path camera_grid;
  fs::path lidar_proposals;
  fs::path camera_proposals;
  fs::path annotations;
  fs::path points;  // empty when absent
};

// Paths in the file are relative to the manifest's directory.
void save_manifest(const fs::path& path, const SceneManifest& m);
// Resolves paths and checks that referenced files exist and grid headers
// match the echoed specs.
SceneManifest load_manifest(const fs::path& path);

}  // namespace bevfuse::io
