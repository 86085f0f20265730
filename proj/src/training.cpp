#include "snodep/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "snodep/error.hpp"

namespace snodep {

void TrajectoryBatch::validate() const {
  if (!(context_len >= 1 && context_len < target_len && target_len <= length())) {
    throw ValidationError("batch: need 1 <= context_len < target_len <= length, got C=" +
                          std::to_string(context_len) + " T=" + std::to_string(target_len) +
                          " length=" + std::to_string(length()));
  }
  if (values.size() != times.size()) throw ShapeError("batch: value/time count mismatch");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ValidationError("batch: times must be strictly ascending");
  }
  const std::size_t b = batch_size();
  for (const auto& v : values) {
    if (v.rank() != 2 || v.rows() != b || v.cols() != values.front().cols()) {
      throw ShapeError("batch: inconsistent value shapes");
    }
  }
  if (!present.empty() && present.size() != b * length()) throw ShapeError("batch: mask size mismatch");
  for (std::size_t e = 0; e < b; ++e) {
    if (!is_present(e, 0)) {
      throw ValidationError("batch: element " + std::to_string(e) + " lacks its first context point");
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i < context_len; ++i) n += is_present(e, i) ? 1 : 0;
    if (n < 2 && context_len >= 2) {
      throw ValidationError("batch: element " + std::to_string(e) + " has fewer than 2 context points");
    }
  }
}

ContextBatch TrajectoryBatch::prefix_context(std::size_t n) const {
  if (n == 0 || n > length()) throw ValidationError("batch: prefix length out of range");
  const std::size_t b = batch_size();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t e = 0; e < b && !any; ++e) any = is_present(e, i);
    if (any) keep.push_back(i);
  }
  ContextBatch out;
  bool gaps = false;
  for (std::size_t i : keep) {
    out.times.push_back(times[i]);
    out.values.push_back(values[i]);
    for (std::size_t e = 0; e < b; ++e) gaps = gaps || !is_present(e, i);
  }
  if (gaps) {
    for (std::size_t e = 0; e < b; ++e) {
      for (std::size_t i : keep) out.present.push_back(is_present(e, i) ? 1 : 0);
    }
  }
  return out;
}

std::vector<std::uint8_t> irregular_mask(std::size_t length, std::size_t context_len,
                                         std::size_t target_len, double frequency, Rng& rng) {
  if (!(frequency > 0.0 && frequency <= 1.0)) throw ValidationError("frequency must lie in (0, 1]");
  if (!(context_len >= 1 && context_len <= target_len && target_len <= length)) {
    throw ValidationError("irregular mask: need 1 <= C <= T <= length");
  }
  std::vector<std::uint8_t> mask(length, 1);
  if (frequency >= 1.0) return mask;
  const std::size_t min_ctx = std::min<std::size_t>(2, context_len);
  const auto target_keep = static_cast<std::size_t>(std::llround(frequency * static_cast<double>(target_len)));
  const std::size_t n_keep = std::clamp<std::size_t>(target_keep, min_ctx, target_len);
  std::vector<std::size_t> rest(target_len - 1);
  std::iota(rest.begin(), rest.end(), 1);
  std::vector<std::size_t> chosen;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::shuffle(rest.begin(), rest.end(), rng);
    chosen.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_keep - 1));
    const auto in_ctx = std::count_if(chosen.begin(), chosen.end(),
                                      [&](std::size_t i) { return i < context_len; });
    if (static_cast<std::size_t>(in_ctx) + 1 >= min_ctx) break;
    if (attempt == 999) chosen.front() = 1;  // n_keep >= 2 here, so index 1 is in context
  }
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(target_len), 0);
  mask[0] = 1;
  for (std::size_t i : chosen) mask[i] = 1;
  return mask;
}

TrajectorySampler::TrajectorySampler(const TimeSeriesDataset& ds, std::size_t length)
    : ds_(&ds), length_(length) {
  ds.validate();
  if (length == 0 || length > ds.num_timesteps()) {
    throw ValidationError("sampler: need " + std::to_string(length) + " timesteps, dataset has " +
                          std::to_string(ds.num_timesteps()));
  }
  groups_ = group_samples(ds);
}

TrajectoryBatch TrajectorySampler::sample(std::size_t batch, Rng& rng, int group) const {
  if (batch == 0) throw ValidationError("sampler: batch size must be positive");
  if (group >= static_cast<int>(num_groups())) throw ValidationError("sampler: group out of range");
  const std::size_t d = ds_->dim();
  std::vector<std::size_t> picked(batch);
  std::uniform_int_distribution<std::size_t> pick_group(0, num_groups() - 1);
  for (auto& g : picked) g = group >= 0 ? static_cast<std::size_t>(group) : (num_groups() > 1 ? pick_group(rng) : 0);
  TrajectoryBatch out;
  for (std::size_t t = 0; t < length_; ++t) {
    out.times.push_back(ds_->times[t]);
    std::vector<double> v(batch * d);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto& members = groups_.members[picked[b]][t];
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      const auto s = ds_->steps[t].sample(members[pick(rng)]);
      std::copy(s.begin(), s.end(), v.begin() + static_cast<std::ptrdiff_t>(b * d));
    }
    out.values.push_back(Tensor::constant({batch, d}, std::move(v)));
  }
  return out;
}

ElboNoise draw_noise(const ProcessModel& model, std::size_t batch, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](std::size_t cols) {
    std::vector<double> v(batch * cols);
    for (double& x : v) x = normal(rng);
    return Tensor::constant({batch, cols}, std::move(v));
  };
  ElboNoise n;
  n.l0 = fill(model.config().z_dim);
  n.d = fill(model.config().d_dim);
  return n;
}

ElboTerms elbo_terms(const ProcessModel& model, const TrajectoryBatch& batch, const ElboNoise& noise,
                     double kl_weight) {
  batch.validate();
  const ContextBatch ctx = batch.context();
  const ContextBatch tgt = batch.target();
  const LatentPair q_ctx = model.encode(ctx);
  const LatentPair q_tgt = model.encode(tgt);
  const LatentDraw draw = model.draw(q_tgt, batch.times.front(), noise.l0, noise.d);
  const std::vector<OutputDist> dists = model.decode(draw, tgt.times);

  const std::size_t b = batch.batch_size();
  Tensor ll;
  std::vector<double> factors(b);
  for (std::size_t i = 0; i < tgt.length(); ++i) {
    Tensor term = output_log_prob(dists[i], tgt.values[i]);
    if (!tgt.present.empty()) {
      for (std::size_t e = 0; e < b; ++e) factors[e] = tgt.is_present(e, i) ? 1.0 : 0.0;
      term = scale_rows(term, factors);
    }
    ll = ll.defined() ? add(ll, term) : term;
  }
  const Tensor kl0 = kl_divergence(q_tgt.first, q_ctx.first);
  const Tensor kld = kl_divergence(q_tgt.second, q_ctx.second);
  ElboTerms out;
  out.loss = mean(sub(scale(add(kl0, kld), kl_weight), ll));
  const double inv = 1.0 / static_cast<double>(b);
  for (double v : ll.values()) out.log_likelihood += v * inv;
  for (double v : kl0.values()) out.kl_l0 += v * inv;
  for (double v : kld.values()) out.kl_d += v * inv;
  return out;
}

void TrainConfig::validate() const {
  if (steps == 0) throw ValidationError("train.steps must be positive");
  if (batch_size == 0) throw ValidationError("train.batch_size must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("train.lr must be a non-negative number");
  if (!(kl_weight >= 0.0)) throw ValidationError("train.kl_weight must be non-negative");
  if (!(frequency > 0.0 && frequency <= 1.0)) throw ValidationError("train.frequency must lie in (0, 1]");
  if (!(context_len >= 2 && context_len < target_len)) {
    throw ValidationError("train.context_len must be >= 2 and below train.target_len");
  }
  if (frequency < 1.0 && frequency * static_cast<double>(context_len) < 2.0) {
    throw ValidationError("train.frequency * train.context_len must be >= 2 (expected present context points)");
  }
}

void check_model_data(const ProcessModel& model, const TimeSeriesDataset& ds) {
  ds.validate();
  if (ds.dim() != model.config().y_dim) {
    throw ValidationError("model.y_dim is " + std::to_string(model.config().y_dim) + " but the data have " +
                          std::to_string(ds.dim()) + " features");
  }
  if (model.config().head == HeadKind::poisson) {
    for (std::size_t t = 0; t < ds.num_timesteps(); ++t) {
      for (double v : ds.steps[t].data) {
        if (!(v >= 0.0 && std::floor(v) == v)) {
          throw ValidationError("model.head=poisson needs non-negative integer data; timestep " +
                                std::to_string(t) + " holds " + std::to_string(v));
        }
      }
    }
  }
}

TrainResult train(ProcessModel& model, const TimeSeriesDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  check_model_data(model, ds);
  if (ds.num_timesteps() < cfg.target_len) {
    throw ValidationError("train.target_len is " + std::to_string(cfg.target_len) + " but the data have " +
                          std::to_string(ds.num_timesteps()) + " timesteps");
  }
  TrajectorySampler sampler(ds, cfg.target_len);
  Rng rng(cfg.seed);
  std::vector<Tensor> params = model.parameters().tensors();
  AdamState adam(params, AdamConfig{.lr = cfg.lr});
  TrainResult result;
  result.losses.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    TrajectoryBatch batch = sampler.sample(cfg.batch_size, rng);
    batch.context_len = cfg.context_len;
    batch.target_len = cfg.target_len;
    if (cfg.frequency < 1.0) {
      const auto row = irregular_mask(batch.length(), cfg.context_len, cfg.target_len, cfg.frequency, rng);
      batch.present.clear();
      for (std::size_t b = 0; b < cfg.batch_size; ++b) batch.present.insert(batch.present.end(), row.begin(), row.end());
    }
    const ElboNoise noise = draw_noise(model, cfg.batch_size, rng);
    Tensor loss;
    try {
      loss = elbo_loss(model, batch, noise, cfg.kl_weight);
    } catch (const NumericalError& e) {
      throw NumericalError("training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw NumericalError("training diverged at step " + std::to_string(step) + ": loss is " +
                           std::to_string(value));
    }
    result.losses.push_back(value);
    adam.update(params, backward(loss));
    if (cfg.on_step) cfg.on_step(step, value);
  }
  return result;
}

}  // namespace snodep
