#pragma once

// ELBO objective, pseudo-trajectory batching with irregular masking, and the
// Adam training loop.

#include <cstdint>
#include <functional>
#include <vector>

#include "snodep/adam.hpp"
#include "snodep/dataset.hpp"
#include "snodep/process_model.hpp"

namespace snodep {

/// B pseudo-trajectories on a shared time grid. The context is the first
/// `context_len` points and the target the first `target_len`.
struct TrajectoryBatch {
  std::vector<double> times;
  std::vector<Tensor> values;  // one B x y_dim tensor per time
  std::size_t context_len = 0;
  std::size_t target_len = 0;
  std::vector<std::uint8_t> present;  // B x times.size(), empty = all present

  std::size_t batch_size() const { return values.empty() ? 0 : values.front().rows(); }
  std::size_t length() const { return times.size(); }
  bool is_present(std::size_t b, std::size_t i) const {
    return present.empty() || present[b * length() + i] != 0;
  }

  /// Throws unless C < T <= length, shapes agree and every element keeps its
  /// first point and at least two context points.
  void validate() const;
  /// Leading `n` points. Timesteps absent for the whole batch are dropped;
  /// any remaining per-element gaps stay in the mask.
  ContextBatch prefix_context(std::size_t n) const;
  ContextBatch context() const { return prefix_context(context_len); }
  ContextBatch target() const { return prefix_context(target_len); }
};

/// Presence mask over `length` timesteps for one trajectory. With
/// frequency 1 every point is kept and no random numbers are drawn. Otherwise
/// max(2, round(frequency * target_len)) of the first `target_len` points are
/// kept uniformly at random, always including index 0 and at least two of the
/// first `context_len`; points past the target are kept.
std::vector<std::uint8_t> irregular_mask(std::size_t length, std::size_t context_len,
                                         std::size_t target_len, double frequency, Rng& rng);

/// Draws pseudo-trajectories: per trajectory, one independently chosen sample
/// at every timestep, all from one knockout group when the data carry one.
class TrajectorySampler {
 public:
  TrajectorySampler(const TimeSeriesDataset& ds, std::size_t length);

  std::size_t num_groups() const { return groups_.keys.size(); }
  std::size_t length() const { return length_; }

  /// `group` < 0 picks a group per trajectory uniformly.
  TrajectoryBatch sample(std::size_t batch, Rng& rng, int group = -1) const;

 private:
  const TimeSeriesDataset* ds_;
  std::size_t length_;
  SampleGroups groups_;
};

struct ElboNoise {
  Tensor l0;  // B x z_dim standard normal; undefined = central draw
  Tensor d;   // B x d_dim
};

struct ElboTerms {
  Tensor loss;              // scalar negative ELBO, mean over the batch
  double log_likelihood = 0.0;  // batch means
  double kl_l0 = 0.0;
  double kl_d = 0.0;
};

/// mean_b [ -sum_{present targets} log p(y | l0, d, t) + w * (KL_L0 + KL_D) ],
/// with latents drawn from q(.|target) and KL(q(.|target) || q(.|context)).
ElboTerms elbo_terms(const ProcessModel& model, const TrajectoryBatch& batch, const ElboNoise& noise,
                     double kl_weight = 1.0);
inline Tensor elbo_loss(const ProcessModel& model, const TrajectoryBatch& batch,
                        const ElboNoise& noise, double kl_weight = 1.0) {
  return elbo_terms(model, batch, noise, kl_weight).loss;
}

/// Standard-normal noise of the right shapes for `model` and batch size.
ElboNoise draw_noise(const ProcessModel& model, std::size_t batch, Rng& rng);

struct TrainConfig {
  std::size_t steps = 5000;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double frequency = 1.0;
  double kl_weight = 1.0;
  std::size_t context_len = 8;
  std::size_t target_len = 13;
  /// Called after every step with (step, loss).
  std::function<void(std::size_t, double)> on_step;

  void validate() const;
};

struct TrainResult {
  std::vector<double> losses;
};

/// Throws ValidationError when counts are required (poisson head) and the
/// dataset holds non-integer or negative values, or dims disagree.
void check_model_data(const ProcessModel& model, const TimeSeriesDataset& ds);

TrainResult train(ProcessModel& model, const TimeSeriesDataset& ds, const TrainConfig& cfg);

}  // namespace snodep
