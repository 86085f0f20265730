#pragma once

// Test-MSE against empirical ground-truth parameters of held-out samples:
//   poisson  per dim: lambda* + (lambda - lambda*)^2
//   gaussian per dim: sigma*^2 + (mu - mu*)^2
// summed over dimensions. The headline averages over the unseen timesteps
// (those at or past the training target length).

#include <cstdint>
#include <functional>
#include <vector>

#include "snodep/dataset.hpp"
#include "snodep/process_model.hpp"
#include "snodep/training.hpp"

namespace snodep {

double poisson_mse(double lambda, double lambda_star);
double gaussian_mse(double mu, double mu_star, double var_star);

struct MetricReport {
  std::vector<double> times;
  std::vector<double> mse;                   // per timestep
  std::vector<std::vector<double>> per_dim;  // timestep x scored dim
  std::size_t unseen_from = 0;               // first unseen timestep index
  double unseen_mse = 0.0;                   // mean of mse over unseen timesteps
  double all_mse = 0.0;                      // mean of mse over all timesteps
  std::vector<double> unseen_per_dim;        // mean per dim over unseen timesteps

  /// Mean of mse over timesteps >= `from` (NaN when the range is empty).
  double mean_from(std::size_t from) const;
};

/// Scores predicted means (timestep x dim) against the samples of each
/// timestep; each needs >= 2 samples. The variance estimate is unbiased.
MetricReport test_mse(HeadKind head, std::span<const double> times,
                      const std::vector<std::vector<double>>& predicted,
                      const std::vector<SampleMatrix>& samples, std::size_t unseen_from,
                      std::size_t scored_dims = 0);

struct EvalConfig {
  std::size_t context_len = 8;
  std::size_t target_len = 13;
  std::size_t num_contexts = 256;
  double frequency = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Predicted mean parameters (timestep x dim) at every dataset time, averaged
/// over `num_contexts` pseudo-trajectory contexts drawn from `ds` (restricted
/// to knockout group `group`, or any group when negative).
std::vector<std::vector<double>> predict_means(const ProcessModel& model, const TimeSeriesDataset& ds,
                                               const EvalConfig& cfg, int group = -1);

/// Mean-predictor hook: group index -> timestep x dim means.
using MeanPredictor = std::function<std::vector<std::vector<double>>(std::size_t group)>;

/// Scores a predictor on `test`, per knockout group, averaging the reports.
/// Knockout indicator columns are not scored.
MetricReport evaluate_means(HeadKind head, const TimeSeriesDataset& test, const MeanPredictor& predict,
                            std::size_t unseen_from);

MetricReport evaluate(const ProcessModel& model, const TimeSeriesDataset& test, const EvalConfig& cfg);

/// Global per-feature mean of `train` over its first `upto` timesteps,
/// repeated at every time of `test`.
MetricReport evaluate_constant_mean(HeadKind head, const TimeSeriesDataset& train,
                                    const TimeSeriesDataset& test, std::size_t upto,
                                    std::size_t unseen_from);

struct SweepRow {
  std::size_t context_len = 0;
  std::size_t target_len = 0;
  double unseen_mse = 0.0;  // over timesteps >= this row's target length
  double common_mse = 0.0;  // over timesteps >= the largest target length in the sweep
};

/// Trains one model per context length C with target length C + C/2 and
/// scores it on `test`.
std::vector<SweepRow> context_sweep(const TimeSeriesDataset& train_ds, const TimeSeriesDataset& test_ds,
                                    const std::vector<std::size_t>& contexts, const ModelConfig& model_cfg,
                                    const TrainConfig& train_cfg, const EvalConfig& eval_cfg);

}  // namespace snodep
