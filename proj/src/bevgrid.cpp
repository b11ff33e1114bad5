#include "bevfuse/bevgrid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bevfuse/error.hpp"
#include "bevfuse/random.hpp"

namespace bevfuse {

void GridSpec::validate() const {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw ConfigError("grid dimensions must be positive, got " + std::to_string(height) + "x" +
                      std::to_string(width) + "x" + std::to_string(channels));
  }
  if (!(x_min < x_max) || !(y_min < y_max)) throw ConfigError("grid window must satisfy min < max on both axes");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw ConfigError("grid window must be finite");
  }
}

bool GridSpec::same_window(const GridSpec& other) const {
  return height == other.height && width == other.width && x_min == other.x_min && x_max == other.x_max &&
         y_min == other.y_min && y_max == other.y_max;
}

BevGrid::BevGrid(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  data_.assign(spec_.value_count(), 0.0);
}

BevGrid::BevGrid(const GridSpec& spec, std::vector<double> data) : spec_(spec), data_(std::move(data)) {
  spec_.validate();
  if (data_.size() != spec_.value_count()) {
    throw ConfigError("grid data holds " + std::to_string(data_.size()) + " values, expected " +
                      std::to_string(spec_.value_count()));
  }
  if (!all_finite()) throw ConfigError("grid data contains non-finite values");
}

bool BevGrid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool operator==(const BevGrid& a, const BevGrid& b) {
  return a.spec_.same_window(b.spec_) && a.spec_.channels == b.spec_.channels && a.data_ == b.data_;
}

ContextWeights ContextWeights::zeros(int channels) {
  ContextWeights w;
  w.channels = channels;
  w.value_proj.assign(static_cast<std::size_t>(channels) * channels, 0.0);
  w.key_proj.assign(static_cast<std::size_t>(channels), 0.0);
  return w;
}

ContextWeights ContextWeights::seeded(int channels, std::uint64_t seed) {
  ContextWeights w = zeros(channels);
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(channels));
  for (auto& v : w.value_proj) v = rng.uniform(-s, s);
  for (auto& v : w.key_proj) v = rng.uniform(-s, s);
  return w;
}

GridCoord absl_to_rela(Vec2 point, const GridSpec& spec) {
  return {(point.y - spec.y_min) / spec.cell_size_y() - 0.5, (point.x - spec.x_min) / spec.cell_size_x() - 0.5};
}

Vec2 rela_to_absl(GridCoord coord, const GridSpec& spec) {
  return {spec.x_min + (coord.col + 0.5) * spec.cell_size_x(), spec.y_min + (coord.row + 0.5) * spec.cell_size_y()};
}

bool in_sample_domain(GridCoord coord, const GridSpec& spec) {
  return coord.row >= 0.0 && coord.row <= spec.height - 1 && coord.col >= 0.0 && coord.col <= spec.width - 1;
}

GridCoord clamp_to_domain(GridCoord coord, const GridSpec& spec) {
  return {std::clamp(coord.row, 0.0, static_cast<double>(spec.height - 1)),
          std::clamp(coord.col, 0.0, static_cast<double>(spec.width - 1))};
}

void bilinear_sample(const BevGrid& grid, GridCoord coord, std::span<double> out) {
  const GridSpec& spec = grid.spec();
  if (out.size() != static_cast<std::size_t>(spec.channels)) throw ContractError("bilinear_sample: output length != C");
  const GridCoord c = clamp_to_domain(coord, spec);
  const int r0 = static_cast<int>(std::floor(c.row));
  const int c0 = static_cast<int>(std::floor(c.col));
  const int r1 = std::min(r0 + 1, spec.height - 1);
  const int c1 = std::min(c0 + 1, spec.width - 1);
  const double fr = c.row - r0;
  const double fc = c.col - c0;
  const double w00 = (1.0 - fr) * (1.0 - fc);
  const double w01 = (1.0 - fr) * fc;
  const double w10 = fr * (1.0 - fc);
  const double w11 = fr * fc;
  const auto v00 = grid.cell(r0, c0);
  const auto v01 = grid.cell(r0, c1);
  const auto v10 = grid.cell(r1, c0);
  const auto v11 = grid.cell(r1, c1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = w00 * v00[k] + w01 * v01[k] + w10 * v10[k] + w11 * v11[k];
  }
}

std::vector<double> bilinear_sample(const BevGrid& grid, GridCoord coord) {
  std::vector<double> out(static_cast<std::size_t>(grid.channels()));
  bilinear_sample(grid, coord, out);
  return out;
}

std::vector<CellIndex> surrounding_int_coords(GridCoord coord, const GridSpec& spec) {
  const double fr = std::floor(coord.row);
  const double fc = std::floor(coord.col);
  auto clamp_row = [&](double r) { return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(spec.height - 1))); };
  auto clamp_col = [&](double c) { return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(spec.width - 1))); };
  const int r0 = clamp_row(fr);
  const int r1 = clamp_row(fr + 1.0);
  const int c0 = clamp_col(fc);
  const int c1 = clamp_col(fc + 1.0);
  std::vector<CellIndex> cells{{r0, c0}, {r0, c1}, {r1, c0}, {r1, c1}};
  std::sort(cells.begin(), cells.end(), [](CellIndex a, CellIndex b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

CellIndex nearest_cell(GridCoord coord, const GridSpec& spec) {
  const double r = std::floor(coord.row + 0.5);
  const double c = std::floor(coord.col + 0.5);
  return {static_cast<int>(std::clamp(r, 0.0, static_cast<double>(spec.height - 1))),
          static_cast<int>(std::clamp(c, 0.0, static_cast<double>(spec.width - 1)))};
}

BevGrid global_context_refine(const BevGrid& grid, const ContextWeights& weights, kernels::Execution exec) {
  const auto channels = static_cast<std::size_t>(grid.channels());
  if (weights.channels != grid.channels() || weights.value_proj.size() != channels * channels ||
      weights.key_proj.size() != channels) {
    throw ConfigError("context weights are for " + std::to_string(weights.channels) + " channels, grid has " +
                      std::to_string(grid.channels()));
  }

  // The value projection is linear, so pooling the raw features first and
  // projecting once equals summing projected features per position.
  std::vector<double> pooled(channels, 0.0);
  kernels::context_pool(exec, grid.data(), grid.spec().cell_count(), channels, weights.key_proj, pooled);

  std::vector<double> context(channels, 0.0);
  for (std::size_t o = 0; o < channels; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < channels; ++i) acc += weights.value_proj[o * channels + i] * pooled[i];
    context[o] = acc;
  }

  BevGrid out = grid;
  auto data = out.data();
  for (std::size_t p = 0; p < grid.spec().cell_count(); ++p) {
    for (std::size_t c = 0; c < channels; ++c) data[p * channels + c] += context[c];
  }
  return out;
}

void write_add(BevGrid& grid, CellIndex cell, std::span<const double> vec) {
  if (!grid.in_bounds(cell)) {
    throw ContractError("write_add: cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                        ") outside " + std::to_string(grid.height()) + "x" + std::to_string(grid.width()));
  }
  if (vec.size() != static_cast<std::size_t>(grid.channels())) throw ContractError("write_add: vector length != C");
  auto dst = grid.cell(cell);
  for (std::size_t k = 0; k < vec.size(); ++k) dst[k] += vec[k];
}

BevGrid slice_channels(const BevGrid& grid, int first, int count) {
  if (first < 0 || count <= 0 || first + count > grid.channels()) throw ContractError("slice_channels: bad range");
  GridSpec spec = grid.spec();
  spec.channels = count;
  BevGrid out(spec);
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      const auto src = grid.cell(r, c).subspan(static_cast<std::size_t>(first), static_cast<std::size_t>(count));
      std::copy(src.begin(), src.end(), out.cell(r, c).begin());
    }
  }
  return out;
}

}  // namespace bevfuse
