#include "bevfuse/readout.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "bevfuse/error.hpp"

namespace bevfuse {

void ReadoutConfig::validate() const {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) throw ConfigError("readout threshold must be positive");
  if (!(attach_radius >= 0.0)) throw ConfigError("readout attach radius must be non-negative");
}

std::vector<double> cell_energy(const BevGrid& grid) {
  std::vector<double> e(grid.spec().cell_count(), 0.0);
  if (grid.channels() == 0) return e;
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      double s = 0.0;
      for (double v : grid.cell(r, c)) s += v * v;
      e[static_cast<std::size_t>(r) * static_cast<std::size_t>(grid.width()) + static_cast<std::size_t>(c)] =
          s / grid.channels();
    }
  }
  return e;
}

std::vector<CellIndex> energy_peaks(const BevGrid& grid, double threshold) {
  const auto e = cell_energy(grid);
  const int h = grid.height();
  const int w = grid.width();
  auto at = [&](int r, int c) { return e[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)]; };
  std::vector<CellIndex> peaks;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double v = at(r, c);
      if (!(v > threshold)) continue;
      bool peak = true;
      for (int dr = -1; dr <= 1 && peak; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if ((dr == 0 && dc == 0) || rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          const bool earlier = dr < 0 || (dr == 0 && dc < 0);
          const double n = at(rr, cc);
          if (n > v || (earlier && n == v)) {
            peak = false;
            break;
          }
        }
      }
      if (peak) peaks.push_back({r, c});
    }
  }
  return peaks;
}

std::vector<Detection> readout_detect(const BevGrid& fused, std::span<const Proposal> lidar_proposals,
                                      std::span<const Proposal> camera_proposals, const ReadoutConfig& config) {
  config.validate();
  const GridSpec& spec = fused.spec();
  const auto energy = cell_energy(fused);
  const auto peaks = energy_peaks(fused, config.threshold);

  std::vector<const Proposal*> proposals;
  for (const auto& p : lidar_proposals) proposals.push_back(&p);
  for (const auto& p : camera_proposals) proposals.push_back(&p);

  struct Candidate {
    CellIndex cell;
    double energy;
    std::optional<std::size_t> proposal;
  };
  std::vector<Candidate> cands;
  cands.reserve(peaks.size());
  for (const auto& pk : peaks) {
    const Vec2 pos = rela_to_absl({static_cast<double>(pk.row), static_cast<double>(pk.col)}, spec);
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      const double d = std::hypot(proposals[i]->box.center.x - pos.x, proposals[i]->box.center.y - pos.y);
      if (d <= config.attach_radius && d < best_d) {
        best = i;
        best_d = d;
      }
    }
    const double e = energy[static_cast<std::size_t>(pk.row) * static_cast<std::size_t>(spec.width) +
                            static_cast<std::size_t>(pk.col)];
    cands.push_back({pk, e, best});
  }

  // Proposal claimed by several peaks: the strongest (then earliest) keeps it.
  std::vector<std::optional<std::size_t>> owner(proposals.size());
  for (std::size_t k = 0; k < cands.size(); ++k) {
    if (!cands[k].proposal) continue;
    auto& o = owner[*cands[k].proposal];
    if (!o || cands[k].energy > cands[*o].energy) o = k;
  }

  std::vector<Detection> dets;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const auto& cand = cands[k];
    Detection d;
    d.score = energy_probability(cand.energy, config.threshold);
    if (cand.proposal) {
      if (owner[*cand.proposal] != k) continue;
      d.box = proposals[*cand.proposal]->box;
      d.class_id = proposals[*cand.proposal]->class_id;
    } else {
      const Vec2 pos = rela_to_absl({static_cast<double>(cand.cell.row), static_cast<double>(cand.cell.col)}, spec);
      d.box.center = {pos.x, pos.y, 0.0};
      d.box.size = {1.0, 1.0, 1.0};
      d.class_id = 0;
    }
    dets.push_back(d);
  }
  return dets;
}

}  // namespace bevfuse
