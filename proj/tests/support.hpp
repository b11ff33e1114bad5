#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/ifg.hpp"
#include "bevfuse/random.hpp"
#include "oracles.hpp"

namespace testing_support {

using namespace bevfuse;

inline Box3D make_box(double x, double y, double w, double l, double yaw = 0.0, double h = 1.5) {
  Box3D b;
  b.center = {x, y, 0.0};
  b.size = {w, l, h};
  b.yaw = yaw;
  return b;
}

inline RotatedRect random_rect(Rng& rng, double spread = 3.0) {
  RotatedRect r;
  r.center = {rng.uniform(-spread, spread), rng.uniform(-spread, spread)};
  r.w = rng.uniform(0.3, 5.0);
  r.l = rng.uniform(0.3, 5.0);
  r.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return r;
}

inline InstanceFeature make_instance(const Box3D& box, int class_id, std::vector<double> raw, std::size_t source = 0,
                                     Modality m = Modality::lidar) {
  InstanceFeature f;
  f.proposal.box = box;
  f.proposal.score = 1.0;
  f.proposal.class_id = class_id;
  f.proposal.modality = m;
  f.source_index = source;
  f.raw = std::move(raw);
  return f;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline BevGrid random_grid(Rng& rng, const GridSpec& spec, double lo = -1.0, double hi = 1.0) {
  BevGrid g(spec);
  for (auto& v : g.data()) v = rng.uniform(lo, hi);
  return g;
}

inline oracle::Grid3 to_grid3(const BevGrid& g) {
  oracle::Grid3 o;
  o.h = g.height();
  o.w = g.width();
  o.c = g.channels();
  o.x_min = g.spec().x_min;
  o.x_max = g.spec().x_max;
  o.y_min = g.spec().y_min;
  o.y_max = g.spec().y_max;
  o.v.assign(static_cast<std::size_t>(o.h),
             std::vector<std::vector<double>>(static_cast<std::size_t>(o.w), std::vector<double>(static_cast<std::size_t>(o.c))));
  for (int r = 0; r < o.h; ++r) {
    for (int c = 0; c < o.w; ++c) {
      const auto cell = g.cell(r, c);
      for (int k = 0; k < o.c; ++k) o.v[r][c][k] = cell[static_cast<std::size_t>(k)];
    }
  }
  return o;
}

// Exact equality of every value, bit for bit.
inline bool bit_identical(const BevGrid& g, const oracle::Grid3& o) {
  if (g.height() != o.h || g.width() != o.w || g.channels() != o.c) return false;
  for (int r = 0; r < o.h; ++r) {
    for (int c = 0; c < o.w; ++c) {
      const auto cell = g.cell(r, c);
      for (int k = 0; k < o.c; ++k) {
        if (std::memcmp(&cell[static_cast<std::size_t>(k)], &o.v[r][c][k], sizeof(double)) != 0) return false;
      }
    }
  }
  return true;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("bevfuse_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
