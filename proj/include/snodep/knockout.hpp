#pragma once

// Gene-knockout datasets: zero random subsets of the most expressed genes,
// re-estimate flux and balance, and tag every sample with the indicator b^g
// (0 on knocked genes, 1 elsewhere).

#include <functional>
#include <vector>

#include "snodep/dataset.hpp"
#include "snodep/pathway.hpp"
#include "snodep/scfea.hpp"

namespace snodep {

/// Flux/balance estimator applied to each knocked expression dataset.
using FluxEstimator = std::function<FluxEstimate(const TimeSeriesDataset&, const PathwayDef&)>;

FluxEstimator scfea_estimator(const ScfeaConfig& cfg);

struct KnockoutConfig {
  std::size_t k = 20;
  std::size_t subsets = 5;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::size_t max_redraws = 100;
};

struct KnockoutConfiguration {
  std::vector<std::size_t> knocked;  // sorted pathway-gene indices
  std::vector<double> indicator;     // b^g over the pathway genes
  bool test = false;
  TimeSeriesDataset flux;     // modules + indicator per sample
  TimeSeriesDataset balance;  // metabolites + indicator per sample
};

struct KnockoutDataset {
  std::vector<std::string> genes;      // pathway genes, indicator order
  std::vector<std::size_t> top_genes;  // the k most expressed, descending
  std::vector<KnockoutConfiguration> configurations;

  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> test_indices() const;
};

/// Indices of the k features with the largest total value over all samples
/// and timesteps, descending; ties go to the lower index.
std::vector<std::size_t> top_expressed(const TimeSeriesDataset& ds, std::size_t k);

/// Copy of `ds` with the listed feature columns set to zero.
TimeSeriesDataset knock_out(const TimeSeriesDataset& ds, const std::vector<std::size_t>& features);

/// Appends `indicator` as trailing `ko_<gene>` features to every sample.
TimeSeriesDataset append_indicator(const TimeSeriesDataset& ds, const std::vector<double>& indicator,
                                   const std::vector<std::string>& genes);

KnockoutDataset knockout_generate(const TimeSeriesDataset& expression, const PathwayDef& pathway,
                                  const KnockoutConfig& cfg, const FluxEstimator& estimator);

/// Samples of the selected configurations merged per timestep; ids are
/// prefixed with "s<configuration>:".
TimeSeriesDataset pool_configurations(const KnockoutDataset& ko, const std::vector<std::size_t>& which,
                                      bool balance);

}  // namespace snodep
