#include "snodep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snodep/error.hpp"

namespace snodep {

double poisson_mse(double lambda, double lambda_star) {
  const double diff = lambda - lambda_star;
  return lambda_star + diff * diff;
}

double gaussian_mse(double mu, double mu_star, double var_star) {
  const double diff = mu - mu_star;
  return var_star + diff * diff;
}

double MetricReport::mean_from(std::size_t from) const {
  if (from >= mse.size()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::size_t i = from; i < mse.size(); ++i) s += mse[i];
  return s / static_cast<double>(mse.size() - from);
}

namespace {

void finish(MetricReport& r) {
  r.all_mse = r.mean_from(0);
  r.unseen_mse = r.mean_from(r.unseen_from);
  const std::size_t dims = r.per_dim.empty() ? 0 : r.per_dim.front().size();
  r.unseen_per_dim.assign(dims, 0.0);
  if (r.unseen_from < r.mse.size()) {
    for (std::size_t i = r.unseen_from; i < r.mse.size(); ++i) {
      for (std::size_t k = 0; k < dims; ++k) r.unseen_per_dim[k] += r.per_dim[i][k];
    }
    for (double& v : r.unseen_per_dim) v /= static_cast<double>(r.mse.size() - r.unseen_from);
  } else {
    std::fill(r.unseen_per_dim.begin(), r.unseen_per_dim.end(), std::numeric_limits<double>::quiet_NaN());
  }
}

}  // namespace

MetricReport test_mse(HeadKind head, std::span<const double> times,
                      const std::vector<std::vector<double>>& predicted,
                      const std::vector<SampleMatrix>& samples, std::size_t unseen_from,
                      std::size_t scored_dims) {
  if (predicted.size() != times.size() || samples.size() != times.size()) {
    throw ShapeError("test_mse: need one prediction and one sample set per timestep");
  }
  MetricReport r;
  r.times.assign(times.begin(), times.end());
  r.unseen_from = unseen_from;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const SampleMatrix& s = samples[i];
    const std::size_t n = s.count();
    if (n < 2) {
      throw ValidationError("test_mse: timestep " + std::to_string(i) + " has " + std::to_string(n) +
                            " test sample(s), need >= 2");
    }
    const std::size_t dims = scored_dims == 0 ? s.dim : scored_dims;
    if (predicted[i].size() < dims || s.dim < dims) throw ShapeError("test_mse: dimension mismatch");
    std::vector<double> per(dims);
    double total = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      double mean = 0.0;
      for (std::size_t j = 0; j < n; ++j) mean += s.at(k, j);
      mean /= static_cast<double>(n);
      if (head == HeadKind::poisson) {
        per[k] = poisson_mse(predicted[i][k], mean);
      } else {
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (s.at(k, j) - mean) * (s.at(k, j) - mean);
        var /= static_cast<double>(n - 1);
        per[k] = gaussian_mse(predicted[i][k], mean, var);
      }
      total += per[k];
    }
    r.mse.push_back(total);
    r.per_dim.push_back(std::move(per));
  }
  finish(r);
  return r;
}

void EvalConfig::validate() const {
  if (num_contexts == 0) throw ValidationError("eval.num_contexts must be positive");
  if (!(frequency > 0.0 && frequency <= 1.0)) throw ValidationError("eval.frequency must lie in (0, 1]");
  if (!(context_len >= 2 && context_len < target_len)) {
    throw ValidationError("eval: context length must be >= 2 and below the target length");
  }
}

std::vector<std::vector<double>> predict_means(const ProcessModel& model, const TimeSeriesDataset& ds,
                                               const EvalConfig& cfg, int group) {
  cfg.validate();
  check_model_data(model, ds);
  TrajectorySampler sampler(ds, cfg.context_len);
  Rng rng(cfg.seed);
  TrajectoryBatch batch = sampler.sample(cfg.num_contexts, rng, group);
  const std::size_t d = model.config().y_dim;
  std::vector<std::vector<double>> out(ds.num_timesteps(), std::vector<double>(d, 0.0));
  auto accumulate = [&](const ContextBatch& ctx) {
    const auto dists = model.predict(ctx, ds.times);
    for (std::size_t t = 0; t < dists.size(); ++t) {
      const Tensor& m = output_mean(dists[t]);
      for (std::size_t b = 0; b < m.rows(); ++b) {
        for (std::size_t k = 0; k < d; ++k) out[t][k] += m.at(b, k);
      }
    }
  };
  if (cfg.frequency >= 1.0) {
    ContextBatch ctx;
    ctx.times = batch.times;
    ctx.values = batch.values;
    accumulate(ctx);
  } else {
    // Each context gets its own mask; absent points are dropped outright so
    // every encoder sees only the retained observations.
    for (std::size_t b = 0; b < cfg.num_contexts; ++b) {
      const auto mask = irregular_mask(cfg.context_len, cfg.context_len, cfg.context_len, cfg.frequency, rng);
      ContextBatch ctx;
      for (std::size_t i = 0; i < cfg.context_len; ++i) {
        if (!mask[i]) continue;
        ctx.times.push_back(batch.times[i]);
        ctx.values.push_back(slice(batch.values[i], 0, b, b + 1));
      }
      accumulate(ctx);
    }
  }
  for (auto& row : out) {
    for (double& v : row) v /= static_cast<double>(cfg.num_contexts);
  }
  return out;
}

MetricReport evaluate_means(HeadKind head, const TimeSeriesDataset& test, const MeanPredictor& predict,
                            std::size_t unseen_from) {
  test.validate();
  const SampleGroups groups = group_samples(test);
  const std::size_t scored = test.dim() - test.knockout_dims;
  if (scored == 0) throw ValidationError("evaluate: no scored features");
  MetricReport total;
  for (std::size_t g = 0; g < groups.keys.size(); ++g) {
    std::vector<SampleMatrix> samples;
    for (std::size_t t = 0; t < test.num_timesteps(); ++t) {
      SampleMatrix m;
      m.dim = test.dim();
      for (std::size_t j : groups.members[g][t]) m.append(test.steps[t].sample(j), test.steps[t].ids[j]);
      samples.push_back(std::move(m));
    }
    MetricReport r = test_mse(head, test.times, predict(g), samples, unseen_from, scored);
    if (g == 0) {
      total = std::move(r);
      continue;
    }
    for (std::size_t t = 0; t < total.mse.size(); ++t) {
      total.mse[t] += r.mse[t];
      for (std::size_t k = 0; k < scored; ++k) total.per_dim[t][k] += r.per_dim[t][k];
    }
  }
  const double inv = 1.0 / static_cast<double>(groups.keys.size());
  for (std::size_t t = 0; t < total.mse.size(); ++t) {
    total.mse[t] *= inv;
    for (double& v : total.per_dim[t]) v *= inv;
  }
  finish(total);
  return total;
}

MetricReport evaluate(const ProcessModel& model, const TimeSeriesDataset& test, const EvalConfig& cfg) {
  cfg.validate();
  if (cfg.target_len > test.num_timesteps()) {
    throw ValidationError("evaluate: target length exceeds the test timesteps");
  }
  return evaluate_means(
      model.config().head, test,
      [&](std::size_t g) {
        EvalConfig c = cfg;
        c.seed = derive_seed(cfg.seed, g);
        return predict_means(model, test, c, static_cast<int>(g));
      },
      cfg.target_len);
}

MetricReport evaluate_constant_mean(HeadKind head, const TimeSeriesDataset& train,
                                    const TimeSeriesDataset& test, std::size_t upto,
                                    std::size_t unseen_from) {
  train.validate();
  if (train.dim() != test.dim()) throw ValidationError("constant mean: train/test dims differ");
  upto = std::min(upto == 0 ? train.num_timesteps() : upto, train.num_timesteps());
  std::vector<double> mean(train.dim(), 0.0);
  double n = 0.0;
  for (std::size_t t = 0; t < upto; ++t) {
    const auto& s = train.steps[t];
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t k = 0; k < train.dim(); ++k) mean[k] += s.at(k, j);
      n += 1.0;
    }
  }
  for (double& v : mean) v /= n;
  const std::vector<std::vector<double>> pred(test.num_timesteps(), mean);
  return evaluate_means(head, test, [&](std::size_t) { return pred; }, unseen_from);
}

std::vector<SweepRow> context_sweep(const TimeSeriesDataset& train_ds, const TimeSeriesDataset& test_ds,
                                    const std::vector<std::size_t>& contexts, const ModelConfig& model_cfg,
                                    const TrainConfig& train_cfg, const EvalConfig& eval_cfg) {
  if (contexts.empty()) throw ValidationError("sweep: no context lengths given");
  std::size_t horizon = 0;
  for (std::size_t c : contexts) {
    if (c < 2) throw ValidationError("sweep: context lengths must be >= 2");
    horizon = std::max(horizon, c + c / 2);
  }
  if (horizon > train_ds.num_timesteps() || horizon > test_ds.num_timesteps()) {
    throw ValidationError("sweep: C + C/2 = " + std::to_string(horizon) + " exceeds the " +
                          std::to_string(std::min(train_ds.num_timesteps(), test_ds.num_timesteps())) +
                          " available timesteps");
  }
  std::vector<SweepRow> rows;
  for (std::size_t c : contexts) {
    SweepRow row;
    row.context_len = c;
    row.target_len = c + c / 2;
    ProcessModel model(model_cfg);
    TrainConfig tc = train_cfg;
    tc.context_len = c;
    tc.target_len = row.target_len;
    train(model, train_ds, tc);
    EvalConfig ec = eval_cfg;
    ec.context_len = c;
    ec.target_len = row.target_len;
    const MetricReport r = evaluate(model, test_ds, ec);
    row.unseen_mse = r.unseen_mse;
    row.common_mse = r.mean_from(horizon);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace snodep
