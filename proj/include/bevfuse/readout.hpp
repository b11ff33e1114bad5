#pragma once

#include <span>
#include <vector>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/eval.hpp"
#include "bevfuse/ifg.hpp"

// A fixed, training-free detector over a fused BEV grid.
//
// Each cell's energy is the mean of its squared channel values. A cell is a
// peak when its energy exceeds the threshold and it is the maximum of its 3x3
// neighbourhood; on equal energies the cell earlier in raster order wins.
// Each peak borrows the box and class of the nearest proposal (either
// modality, any score) within the attach radius, or gets a unit box of the
// first class at the cell center when none is close. A proposal is claimed by
// at most one peak, the most energetic one; weaker peaks that picked the same
// proposal are dropped as duplicates. Scores are e / (e + threshold).
namespace bevfuse {

struct ReadoutConfig {
  double threshold = 0.5;
  double attach_radius = 2.0;  // meters

  void validate() const;
};

std::vector<double> cell_energy(const BevGrid& grid);

std::vector<CellIndex> energy_peaks(const BevGrid& grid, double threshold);

// Peaks in raster order become detections in raster order.
std::vector<Detection> readout_detect(const BevGrid& fused, std::span<const Proposal> lidar_proposals,
                                      std::span<const Proposal> camera_proposals, const ReadoutConfig& config = {});

inline double energy_probability(double energy, double threshold) { return energy / (energy + threshold); }

}  // namespace bevfuse
