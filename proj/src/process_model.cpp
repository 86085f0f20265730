#include "snodep/process_model.hpp"

#include "snodep/error.hpp"

namespace snodep {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "np") return ModelKind::np;
  if (name == "nodep") return ModelKind::nodep;
  if (name == "snodep") return ModelKind::snodep;
  if (name == "snodep_gruode") return ModelKind::snodep_gruode;
  throw ValidationError("unknown model kind '" + name +
                        "' (expected np, nodep, snodep or snodep_gruode)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::np: return "np";
    case ModelKind::nodep: return "nodep";
    case ModelKind::snodep: return "snodep";
    case ModelKind::snodep_gruode: return "snodep_gruode";
  }
  return "?";
}

HeadKind parse_head_kind(const std::string& name) {
  if (name == "poisson") return HeadKind::poisson;
  if (name == "gaussian") return HeadKind::gaussian;
  throw ValidationError("unknown head '" + name + "' (expected poisson or gaussian)");
}

std::string to_string(HeadKind kind) { return kind == HeadKind::poisson ? "poisson" : "gaussian"; }

EncoderKind encoder_for(ModelKind kind) {
  switch (kind) {
    case ModelKind::np:
    case ModelKind::nodep: return EncoderKind::mean;
    case ModelKind::snodep: return EncoderKind::lstm;
    case ModelKind::snodep_gruode: return EncoderKind::gruode;
  }
  return EncoderKind::mean;
}

ModelKind model_for_encoder(EncoderKind encoder) {
  switch (encoder) {
    case EncoderKind::mean: return ModelKind::nodep;
    case EncoderKind::lstm: return ModelKind::snodep;
    case EncoderKind::gruode: return ModelKind::snodep_gruode;
  }
  return ModelKind::snodep;
}

const Tensor& output_mean(const OutputDist& dist) {
  if (const auto* p = std::get_if<PoissonD>(&dist)) return p->lambda;
  return std::get<DiagNormal>(dist).mu;
}

Tensor output_log_prob(const OutputDist& dist, const Tensor& y) {
  return std::visit([&](const auto& d) { return log_prob(d, y); }, dist);
}

ProcessModel::ProcessModel(const ModelConfig& config) : config_(config) {
  if (config.y_dim == 0 || config.r_dim == 0 || config.z_dim == 0 || config.d_dim == 0 ||
      config.hidden == 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (config.solver.steps_per_unit < 1) throw ValidationError("solver.steps_per_unit must be >= 1");
  Rng rng(config.seed);
  EncoderDims dims{config.y_dim, config.r_dim, config.hidden, config.encoder_time_input};
  switch (encoder_kind()) {
    case EncoderKind::mean: mean_enc_ = make_mean_encoder(params_, "encoder.mean", dims, rng); break;
    case EncoderKind::lstm: lstm_enc_ = make_lstm_encoder(params_, "encoder.lstm", dims, rng); break;
    case EncoderKind::gruode: gru_enc_ = make_gru_ode_encoder(params_, "encoder.gruode", dims, rng); break;
  }
  heads_ = make_latent_heads(params_, "latent", config.r_dim, config.z_dim, config.d_dim, rng);
  const std::size_t dyn_in = config.z_dim + config.d_dim + 1;
  dynamics_ = make_mlp(params_, has_ode_decoder() ? "decoder.field" : "decoder.np",
                       {dyn_in, config.hidden, config.hidden, config.z_dim}, rng);
  const std::size_t out = config.head == HeadKind::poisson ? config.y_dim : 2 * config.y_dim;
  head_ = make_mlp(params_, "output", {config.z_dim, config.hidden, out}, rng);
}

Tensor ProcessModel::represent(const ContextBatch& ctx) const {
  if (ctx.y_dim() != config_.y_dim) {
    throw ShapeError("model expects y_dim " + std::to_string(config_.y_dim) + ", context has " +
                     std::to_string(ctx.y_dim()));
  }
  switch (encoder_kind()) {
    case EncoderKind::mean: return np_encode(ctx, mean_enc_);
    case EncoderKind::lstm: return lstm_encode_backward(ctx, lstm_enc_);
    case EncoderKind::gruode: return gru_ode_encode(ctx, gru_enc_, config_.solver);
  }
  throw Error("unreachable encoder kind");
}

LatentPair ProcessModel::encode(const ContextBatch& ctx) const {
  return latent_params(represent(ctx), heads_, config_.latent);
}

LatentDraw ProcessModel::draw(const LatentPair& q, double origin, const Tensor& noise_l0,
                              const Tensor& noise_d) const {
  LatentDraw out;
  out.l0_dist = q.first;
  out.d_dist = q.second;
  out.l0 = noise_l0.defined() ? reparam_sample(q.first, noise_l0) : central_value(q.first);
  out.d = noise_d.defined() ? reparam_sample(q.second, noise_d) : central_value(q.second);
  out.origin = origin;
  return out;
}

Tensor ProcessModel::decoder_field(double t, const Tensor& l, const Tensor& d) const {
  return dynamics_(concat({l, d, Tensor::filled({l.rows(), 1}, t)}, 1));
}

OutputDist ProcessModel::output_head(const Tensor& latent) const {
  Tensor out = head_(latent);
  const std::size_t y = config_.y_dim;
  if (config_.head == HeadKind::poisson) return PoissonD{positive_rate(out)};
  return DiagNormal{slice(out, 1, 0, y), positive_scale(slice(out, 1, y, 2 * y))};
}

std::vector<OutputDist> ProcessModel::decode(const LatentDraw& draw,
                                             std::span<const double> query_times) const {
  if (query_times.empty()) return {};
  if (query_times.front() < draw.origin) {
    throw ValidationError("decode: query time " + std::to_string(query_times.front()) +
                          " precedes the process origin " + std::to_string(draw.origin));
  }
  for (std::size_t i = 1; i < query_times.size(); ++i) {
    if (!(query_times[i] > query_times[i - 1])) {
      throw ValidationError("decode: query times must be strictly ascending");
    }
  }
  if (config_.latent == LatentFamily::lognormal) {
    for (const Tensor* t : {&draw.l0, &draw.d}) {
      for (double v : t->values()) {
        if (!(v > 0.0)) throw DomainError("decode: lognormal latent draw is not strictly positive");
      }
    }
  }
  const std::size_t batch = draw.l0.rows();
  std::vector<Tensor> states;
  if (has_ode_decoder()) {
    std::vector<double> path;
    const bool prepend = query_times.front() != draw.origin;
    if (prepend) path.push_back(draw.origin);
    path.insert(path.end(), query_times.begin(), query_times.end());
    VectorField field = [this](double t, const Tensor& l, const Tensor& d) {
      return decoder_field(t, l, d);
    };
    states = integrate_path(field, draw.l0, path, draw.d, config_.solver);
    if (prepend) states.erase(states.begin());
  } else {
    std::vector<Tensor> inputs;
    for (double t : query_times) {
      inputs.push_back(concat({draw.l0, draw.d, Tensor::filled({batch, 1}, t)}, 1));
    }
    Tensor latent = dynamics_(inputs.size() == 1 ? inputs[0] : concat(inputs, 0));
    for (std::size_t i = 0; i < query_times.size(); ++i) {
      states.push_back(slice(latent, 0, i * batch, (i + 1) * batch));
    }
  }
  // One head evaluation over all times, split back per time.
  OutputDist stacked = output_head(states.size() == 1 ? states[0] : concat(states, 0));
  std::vector<OutputDist> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::size_t lo = i * batch, hi = (i + 1) * batch;
    if (states.size() == 1) {
      out.push_back(stacked);
    } else if (const auto* p = std::get_if<PoissonD>(&stacked)) {
      out.push_back(PoissonD{slice(p->lambda, 0, lo, hi)});
    } else {
      const auto& g = std::get<DiagNormal>(stacked);
      out.push_back(DiagNormal{slice(g.mu, 0, lo, hi), slice(g.sigma, 0, lo, hi)});
    }
  }
  return out;
}

std::vector<OutputDist> ProcessModel::predict(const ContextBatch& ctx,
                                              std::span<const double> query_times) const {
  LatentDraw d = draw(encode(ctx), ctx.times.front());
  return decode(d, query_times);
}

}  // namespace snodep
