#include "bevfuse/dualguide.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bevfuse/error.hpp"
#include "bevfuse/random.hpp"

namespace bevfuse {

Projection Projection::zeros(std::size_t rows, std::size_t cols) {
  Projection p;
  p.rows = rows;
  p.cols = cols;
  p.matrix.assign(rows * cols, 0.0);
  p.bias.assign(rows, 0.0);
  return p;
}

Projection Projection::identity(std::size_t rows, std::size_t cols) {
  Projection p = zeros(rows, cols);
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) p.matrix[i * cols + i] = 1.0;
  return p;
}

Projection Projection::seeded(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Projection p = zeros(rows, cols);
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(cols));
  for (auto& v : p.matrix) v = rng.uniform(-s, s);
  for (auto& v : p.bias) v = rng.uniform(-s, s);
  return p;
}

void Projection::validate() const {
  if (matrix.size() != rows * cols || bias.size() != rows) {
    throw ConfigError("projection storage does not match its " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " shape");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(matrix.begin(), matrix.end(), finite) || !std::all_of(bias.begin(), bias.end(), finite)) {
    throw ConfigError("projection has non-finite entries");
  }
}

std::vector<double> Projection::apply(std::span<const double> x) const {
  if (x.size() != cols) {
    throw ConfigError("projection expects source length " + std::to_string(cols) + ", got " +
                      std::to_string(x.size()));
  }
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* m = matrix.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += m[c] * x[c];
    y[r] = acc + bias[r];
  }
  return y;
}

std::vector<double> point_squeeze(const InstanceFeature& inst, const Projection& proj) { return proj.apply(inst.raw); }

std::vector<double> point_excitation(const InstanceFeature& inst, const Projection& proj) {
  return proj.apply(inst.raw);
}

PairWeights distance_weights(std::vector<double> distances) {
  PairWeights pw;
  pw.distances = std::move(distances);
  pw.weights.assign(pw.distances.size(), 1.0);
  if (pw.distances.empty()) return pw;
  const auto [lo, hi] = std::minmax_element(pw.distances.begin(), pw.distances.end());
  const double mn = *lo;
  const double mx = *hi;
  if (mx > mn) {
    for (std::size_t i = 0; i < pw.distances.size(); ++i) pw.weights[i] = 1.0 - (pw.distances[i] - mn) / (mx - mn);
  }
  return pw;
}

PairWeights igpe_weights(std::span<const InstancePair> l_hip, std::span<const InstanceFeature> lidar,
                         std::span<const InstanceFeature> camera) {
  std::vector<double> d;
  d.reserve(l_hip.size());
  for (const auto& p : l_hip) d.push_back(center_distance_bev(lidar[p.anchor].proposal.box, camera[p.guide].proposal.box));
  return distance_weights(std::move(d));
}

namespace {

// Shape errors must surface before entering a parallel region.
void check_guides(std::span<const InstanceFeature> guides, std::span<const InstancePair> pairs, bool guide_is_anchor,
                  const Projection& proj) {
  for (const auto& p : pairs) {
    const auto& raw = guides[guide_is_anchor ? p.anchor : p.guide].raw;
    if (raw.size() != proj.cols) {
      throw ConfigError("projection expects source length " + std::to_string(proj.cols) + ", got " +
                        std::to_string(raw.size()));
    }
  }
}

struct PendingWrite {
  GridCoord coord;
  std::vector<double> delta;
};

// gs (bilinear from the unmodified grid) multiplied element-wise by the
// squeezed LiDAR guide. Independent per pair.
std::vector<PendingWrite> pgie_deltas(const BevGrid& grid, std::span<const InstanceFeature> lidar,
                                      std::span<const InstanceFeature> camera,
                                      std::span<const InstancePair> pairs, bool camera_is_anchor,
                                      const Projection& squeeze, kernels::Execution exec) {
  std::vector<PendingWrite> out(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(static) if (exec == kernels::Execution::parallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const InstancePair& p = pairs[static_cast<std::size_t>(k)];
    const InstanceFeature& cam = camera[camera_is_anchor ? p.anchor : p.guide];
    const InstanceFeature& lid = lidar[camera_is_anchor ? p.guide : p.anchor];
    PendingWrite& w = out[static_cast<std::size_t>(k)];
    w.coord = absl_to_rela(cam.bev_center(), grid.spec());
    w.delta = bilinear_sample(grid, w.coord);
    const auto guide = point_squeeze(lid, squeeze);
    for (std::size_t c = 0; c < w.delta.size(); ++c) w.delta[c] *= guide[c];
  }
  return out;
}

}  // namespace

BevGrid pgie(const BevGrid& camera_grid, std::span<const InstanceFeature> lidar,
             std::span<const InstanceFeature> camera, std::span<const InstancePair> eip,
             std::span<const InstancePair> c_hip, const Projection& squeeze, kernels::Execution exec) {
  squeeze.validate();
  if (squeeze.rows != static_cast<std::size_t>(camera_grid.channels())) {
    throw ConfigError("point squeeze targets " + std::to_string(squeeze.rows) + " channels, camera grid has " +
                      std::to_string(camera_grid.channels()));
  }
  check_guides(lidar, eip, true, squeeze);
  check_guides(lidar, c_hip, false, squeeze);
  BevGrid enhanced = camera_grid;
  const GridSpec& spec = camera_grid.spec();

  for (const auto& w : pgie_deltas(camera_grid, lidar, camera, eip, false, squeeze, exec)) {
    const CellIndex cell = nearest_cell(w.coord, spec);
    const auto orig = camera_grid.cell(cell);
    auto dst = enhanced.cell(cell);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = orig[c] + w.delta[c];
  }
  for (const auto& w : pgie_deltas(camera_grid, lidar, camera, c_hip, true, squeeze, exec)) {
    write_add(enhanced, nearest_cell(w.coord, spec), w.delta);
  }
  return enhanced;
}

BevGrid igpe(const BevGrid& lidar_grid, std::span<const InstanceFeature> lidar,
             std::span<const InstanceFeature> camera, std::span<const InstancePair> l_hip,
             const Projection& excitation, kernels::Execution exec) {
  excitation.validate();
  if (excitation.rows != static_cast<std::size_t>(lidar_grid.channels())) {
    throw ConfigError("point excitation targets " + std::to_string(excitation.rows) + " channels, LiDAR grid has " +
                      std::to_string(lidar_grid.channels()));
  }
  check_guides(camera, l_hip, false, excitation);
  BevGrid enhanced = lidar_grid;
  const PairWeights pw = igpe_weights(l_hip, lidar, camera);

  std::vector<std::vector<double>> guides(l_hip.size());
  const auto n = static_cast<std::ptrdiff_t>(l_hip.size());
#pragma omp parallel for schedule(static) if (exec == kernels::Execution::parallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    auto v = point_excitation(camera[l_hip[idx].guide], excitation);
    for (double& x : v) x *= pw.weights[idx];
    guides[idx] = std::move(v);
  }

  for (std::size_t k = 0; k < l_hip.size(); ++k) {
    const GridCoord coord = absl_to_rela(lidar[l_hip[k].anchor].bev_center(), lidar_grid.spec());
    for (const CellIndex cell : surrounding_int_coords(coord, lidar_grid.spec())) {
      const auto orig = lidar_grid.cell(cell);
      auto dst = enhanced.cell(cell);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = orig[c] + guides[k][c];
    }
  }
  return enhanced;
}

BevGrid fuse(const BevGrid& enh_camera, const BevGrid& enh_lidar) {
  if (!enh_camera.spec().same_window(enh_lidar.spec())) {
    throw ConfigError("cannot fuse grids with different windows or lattice sizes");
  }
  GridSpec spec = enh_lidar.spec();
  const int cl = enh_lidar.channels();
  const int cc = enh_camera.channels();
  spec.channels = cl + cc;
  BevGrid out(spec);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      auto dst = out.cell(r, c);
      const auto l = enh_lidar.cell(r, c);
      const auto k = enh_camera.cell(r, c);
      std::copy(l.begin(), l.end(), dst.begin());
      std::copy(k.begin(), k.end(), dst.begin() + cl);
    }
  }
  return out;
}

}  // namespace bevfuse
