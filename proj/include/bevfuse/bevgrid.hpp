#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bevfuse/kernels.hpp"
#include "bevfuse/types.hpp"

namespace bevfuse {

// Metric window and lattice shape of a BEV feature map. Rows run along y,
// columns along x; integer grid coordinates sit at cell centers.
struct GridSpec {
  int height = 180;
  int width = 180;
  int channels = 1;
  double x_min = -54.0;
  double x_max = 54.0;
  double y_min = -54.0;
  double y_max = 54.0;

  double cell_size_x() const { return (x_max - x_min) / width; }
  double cell_size_y() const { return (y_max - y_min) / height; }
  std::size_t cell_count() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::size_t value_count() const { return cell_count() * static_cast<std::size_t>(channels); }

  // Throws ConfigError if any invariant is broken.
  void validate() const;

  // Same lattice and window; channel count is not compared.
  bool same_window(const GridSpec& other) const;

  // Inclusive containment of a metric point in the window.
  bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GridCoord {
  double row = 0.0;
  double col = 0.0;
};

struct CellIndex {
  int row = 0;
  int col = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Dense H x W x C map, row-major by (row, col, channel).
class BevGrid {
 public:
  BevGrid() = default;
  explicit BevGrid(const GridSpec& spec);
  BevGrid(const GridSpec& spec, std::vector<double> data);

  const GridSpec& spec() const { return spec_; }
  int height() const { return spec_.height; }
  int width() const { return spec_.width; }
  int channels() const { return spec_.channels; }

  std::span<double> cell(int row, int col) {
    return {data_.data() + offset(row, col), static_cast<std::size_t>(spec_.channels)};
  }
  std::span<const double> cell(int row, int col) const {
    return {data_.data() + offset(row, col), static_cast<std::size_t>(spec_.channels)};
  }
  std::span<double> cell(CellIndex c) { return cell(c.row, c.col); }
  std::span<const double> cell(CellIndex c) const { return cell(c.row, c.col); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool in_bounds(CellIndex c) const { return c.row >= 0 && c.row < spec_.height && c.col >= 0 && c.col < spec_.width; }

  // True when every value is finite.
  bool all_finite() const;

  friend bool operator==(const BevGrid& a, const BevGrid& b);

 private:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(spec_.width) + static_cast<std::size_t>(col)) *
           static_cast<std::size_t>(spec_.channels);
  }

  GridSpec spec_;
  std::vector<double> data_;
};

// 1x1 convolutions of the global-context block: a C x C value projection
// (row-major) and a single key channel.
struct ContextWeights {
  int channels = 0;
  std::vector<double> value_proj;
  std::vector<double> key_proj;

  static ContextWeights zeros(int channels);
  // Uniform(-s, s) with s = 1/sqrt(channels).
  static ContextWeights seeded(int channels, std::uint64_t seed);
};

GridCoord absl_to_rela(Vec2 point, const GridSpec& spec);
Vec2 rela_to_absl(GridCoord coord, const GridSpec& spec);

// Whether the coordinate lies in [0, H-1] x [0, W-1], the region where
// bilinear sampling needs no clamping.
bool in_sample_domain(GridCoord coord, const GridSpec& spec);

GridCoord clamp_to_domain(GridCoord coord, const GridSpec& spec);

// Border-replicate bilinear sample. Writes C values into `out`.
void bilinear_sample(const BevGrid& grid, GridCoord coord, std::span<double> out);
std::vector<double> bilinear_sample(const BevGrid& grid, GridCoord coord);

// The floor/floor+1 quadruple around a fractional coordinate, clamped into
// the grid and deduplicated, in row-major ascending order.
std::vector<CellIndex> surrounding_int_coords(GridCoord coord, const GridSpec& spec);

// Nearest cell, rounding halves up, clamped into the grid.
CellIndex nearest_cell(GridCoord coord, const GridSpec& spec);

// F' = F + broadcast(sum_p softmax_p(key . f_p) * (value . f_p)).
BevGrid global_context_refine(const BevGrid& grid, const ContextWeights& weights,
                              kernels::Execution exec = kernels::Execution::serial);

// grid[cell] += vec. Throws ContractError for out-of-bounds cells or wrong length.
void write_add(BevGrid& grid, CellIndex cell, std::span<const double> vec);

// Channel slice [first, first + count) of every cell.
BevGrid slice_channels(const BevGrid& grid, int first, int count);

}  // namespace bevfuse
