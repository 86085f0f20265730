#pragma once

// Synthetic time series driven by a damped 2-d oscillator
//   dz/dt = [[-0.1, 1], [-1, -0.1]] z,  z(0) = [1, 0]
// observed through fixed random per-feature projections.

#include <array>
#include <cstdint>
#include <vector>

#include "snodep/dataset.hpp"
#include "snodep/process_model.hpp"

namespace snodep {

struct SyntheticSpec {
  HeadKind kind = HeadKind::poisson;
  std::size_t y_dim = 4;
  std::size_t timesteps = 16;
  std::size_t cells_per_t = 200;
  double dt = 1.0;           // spacing of the observation grid, starting at 0
  double noise_sd = 0.1;     // gaussian kind only
  std::uint64_t seed = 0;
};

struct SyntheticData {
  TimeSeriesDataset data;
  /// Per-timestep true mean (lambda or mu), timesteps x y_dim.
  std::vector<std::vector<double>> mean;
  /// Per-timestep true standard deviation (sqrt(lambda) or noise_sd).
  std::vector<std::vector<double>> sd;
  /// Projection weights (y_dim x 2) and offsets.
  std::vector<std::array<double, 2>> weight;
  std::vector<double> offset;
};

/// Closed-form oscillator state at time t.
std::array<double, 2> oscillator_state(double t);

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Ground truth as CSV: time,mean_<f>...,sd_<f>...
void write_truth_csv(const SyntheticData& data, const std::filesystem::path& path);

}  // namespace snodep
