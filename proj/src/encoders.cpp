#include "snodep/encoders.hpp"

#include <cmath>

#include "snodep/error.hpp"

namespace snodep {

namespace {

Tensor time_column(std::size_t rows, double t) { return Tensor::filled({rows, 1}, t); }

Tensor recurrent_input(const ContextBatch& ctx, std::size_t i, bool time_input) {
  if (!time_input) return ctx.values[i];
  return concat({ctx.values[i], time_column(ctx.batch_size(), ctx.times[i])}, 1);
}

// m * a + (1 - m) * b per row; returns `a` unchanged when every m is 1.
Tensor blend_rows(const std::vector<double>& m, const Tensor& a, const Tensor& b) {
  bool all = true;
  for (double v : m) all = all && v == 1.0;
  if (all) return a;
  std::vector<double> keep(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) keep[i] = 1.0 - m[i];
  return add(scale_rows(a, m), scale_rows(b, keep));
}

void check_finite(const Tensor& h, const char* who, std::size_t index) {
  for (double v : h.values()) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string(who) + ": non-finite hidden state at context index " +
                           std::to_string(index));
    }
  }
}

}  // namespace

bool ContextBatch::all_present() const {
  for (auto p : present) {
    if (!p) return false;
  }
  return true;
}

std::size_t ContextBatch::present_count(std::size_t b) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < length(); ++i) n += is_present(b, i) ? 1 : 0;
  return n;
}

ContextBatch ContextBatch::prefix(std::size_t n) const {
  if (n == 0 || n > length()) throw ValidationError("context prefix length out of range");
  ContextBatch out;
  out.times.assign(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(n));
  out.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n));
  if (!present.empty()) {
    const std::size_t len = length();
    for (std::size_t b = 0; b < batch_size(); ++b) {
      for (std::size_t i = 0; i < n; ++i) out.present.push_back(present[b * len + i]);
    }
  }
  return out;
}

void ContextBatch::validate(std::size_t min_present) const {
  if (times.empty()) throw ValidationError("context: no points");
  if (values.size() != times.size()) {
    throw ValidationError("context: " + std::to_string(values.size()) + " value rows for " +
                          std::to_string(times.size()) + " times");
  }
  const std::size_t b = batch_size(), d = y_dim();
  for (const auto& v : values) {
    if (v.rows() != b || v.cols() != d) throw ShapeError("context: inconsistent value shapes");
  }
  if (!present.empty() && present.size() != b * length()) {
    throw ShapeError("context: mask size does not match batch x length");
  }
  for (std::size_t e = 0; e < b; ++e) {
    if (present_count(e) < min_present) {
      throw ValidationError("context: batch element " + std::to_string(e) + " has " +
                            std::to_string(present_count(e)) + " present points, need " +
                            std::to_string(min_present));
    }
  }
}

ContextBatch ContextSet::as_batch() const {
  ContextBatch out;
  out.times = times;
  if (values.rows() != times.size()) {
    throw ShapeError("context set: " + std::to_string(values.rows()) + " rows for " +
                     std::to_string(times.size()) + " times");
  }
  for (std::size_t i = 0; i < times.size(); ++i) out.values.push_back(slice(values, 0, i, i + 1));
  if (!present.empty()) {
    if (present.size() != times.size()) throw ShapeError("context set: mask length mismatch");
    for (bool p : present) out.present.push_back(p ? 1 : 0);
  }
  return out;
}

EncoderKind parse_encoder_kind(const std::string& name) {
  if (name == "mean") return EncoderKind::mean;
  if (name == "lstm") return EncoderKind::lstm;
  if (name == "gruode") return EncoderKind::gruode;
  throw ValidationError("unknown encoder '" + name + "' (expected mean, lstm or gruode)");
}

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::mean: return "mean";
    case EncoderKind::lstm: return "lstm";
    case EncoderKind::gruode: return "gruode";
  }
  return "?";
}

MeanEncoder make_mean_encoder(ParameterStore& store, const std::string& name, const EncoderDims& dims,
                              Rng& rng) {
  return {make_mlp(store, name, {dims.y_dim + 1, dims.hidden, dims.hidden, dims.r_dim}, rng)};
}

LstmEncoder make_lstm_encoder(ParameterStore& store, const std::string& name,
                              const EncoderDims& dims, Rng& rng) {
  const std::size_t in = dims.y_dim + (dims.time_input ? 1 : 0);
  LstmEncoder enc;
  enc.gates = make_linear(store, name + ".gates", in + dims.r_dim, 4 * dims.r_dim, rng);
  enc.hidden = dims.r_dim;
  enc.time_input = dims.time_input;
  return enc;
}

GruOdeEncoder make_gru_ode_encoder(ParameterStore& store, const std::string& name,
                                   const EncoderDims& dims, Rng& rng) {
  const std::size_t in = dims.y_dim + (dims.time_input ? 1 : 0);
  GruOdeEncoder enc;
  enc.update = make_linear(store, name + ".update", in + dims.r_dim, dims.r_dim, rng);
  enc.reset = make_linear(store, name + ".reset", in + dims.r_dim, dims.r_dim, rng);
  enc.candidate = make_linear(store, name + ".candidate", in + dims.r_dim, dims.r_dim, rng);
  enc.field = make_mlp(store, name + ".field", {dims.r_dim, dims.hidden, dims.r_dim}, rng);
  enc.hidden = dims.r_dim;
  enc.time_input = dims.time_input;
  return enc;
}

LatentHeads make_latent_heads(ParameterStore& store, const std::string& name, std::size_t r_dim,
                              std::size_t z_dim, std::size_t d_dim, Rng& rng) {
  return {make_linear(store, name, r_dim, 2 * z_dim + 2 * d_dim, rng), z_dim, d_dim};
}

Tensor np_encode(const ContextBatch& ctx, const MeanEncoder& enc) {
  ctx.validate(1);
  const std::size_t len = ctx.length(), batch = ctx.batch_size();
  std::vector<Tensor> rows;
  rows.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    rows.push_back(concat({time_column(batch, ctx.times[i]), ctx.values[i]}, 1));
  }
  Tensor h = enc.net(len == 1 ? rows[0] : concat(rows, 0));
  std::vector<double> weight(len * batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double n = static_cast<double>(ctx.present_count(b));
    for (std::size_t i = 0; i < len; ++i) weight[i * batch + b] = ctx.is_present(b, i) ? 1.0 / n : 0.0;
  }
  Tensor weighted = scale_rows(h, weight);
  Tensor r = len == 1 ? weighted : slice(weighted, 0, 0, batch);
  for (std::size_t i = 1; i < len; ++i) r = add(r, slice(weighted, 0, i * batch, (i + 1) * batch));
  return r;
}

std::pair<Tensor, Tensor> lstm_cell(const LstmEncoder& enc, const Tensor& x, const Tensor& h,
                                    const Tensor& c) {
  const std::size_t n = enc.hidden;
  Tensor gates = enc.gates(concat({x, h}, 1));
  Tensor in_gate = sigmoid(slice(gates, 1, 0, n));
  Tensor forget_gate = sigmoid(slice(gates, 1, n, 2 * n));
  Tensor cell_in = tanh(slice(gates, 1, 2 * n, 3 * n));
  Tensor out_gate = sigmoid(slice(gates, 1, 3 * n, 4 * n));
  Tensor c_next = add(mul(forget_gate, c), mul(in_gate, cell_in));
  Tensor h_next = mul(out_gate, tanh(c_next));
  return {h_next, c_next};
}

Tensor lstm_encode_backward(const ContextBatch& ctx, const LstmEncoder& enc) {
  ctx.validate(1);
  if (!ctx.all_present()) {
    throw ValidationError("lstm encoder: masked context points present; use the gruode encoder");
  }
  const std::size_t batch = ctx.batch_size();
  Tensor h = Tensor::zeros({batch, enc.hidden});
  Tensor c = Tensor::zeros({batch, enc.hidden});
  for (std::size_t k = ctx.length(); k-- > 0;) {
    std::tie(h, c) = lstm_cell(enc, recurrent_input(ctx, k, enc.time_input), h, c);
    check_finite(h, "lstm encoder", k);
  }
  return h;
}

Tensor gru_cell(const GruOdeEncoder& enc, const Tensor& x, const Tensor& h) {
  Tensor xh = concat({x, h}, 1);
  Tensor z = sigmoid(enc.update(xh));
  Tensor rg = sigmoid(enc.reset(xh));
  Tensor cand = tanh(enc.candidate(concat({x, mul(rg, h)}, 1)));
  // (1 - z) h + z h~  ==  h + z (h~ - h)
  return add(h, mul(z, sub(cand, h)));
}

Tensor gru_ode_encode(const ContextBatch& ctx, const GruOdeEncoder& enc, const SolverConfig& cfg) {
  ctx.validate(2);
  const std::size_t len = ctx.length(), batch = ctx.batch_size();
  for (std::size_t i = 1; i < len; ++i) {
    if (!(ctx.times[i] > ctx.times[i - 1])) {
      throw ValidationError("gruode encoder: context times must be strictly ascending");
    }
  }
  // earliest[b]: index of the earliest present point of element b.
  std::vector<std::size_t> earliest(batch, len);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = len; i-- > 0;) {
      if (ctx.is_present(b, i)) earliest[b] = i;
    }
  }
  VectorField field = [&enc](double, const Tensor& h, const Tensor&) { return enc.field(h); };
  const Tensor no_ctx;
  std::vector<bool> started(batch, false);
  Tensor h = Tensor::zeros({batch, enc.hidden});
  for (std::size_t i = len; i-- > 0;) {
    if (i + 1 < len) {
      // Evolve elements that have absorbed a point and still have one at or before i.
      std::vector<double> active(batch, 0.0);
      bool any = false;
      for (std::size_t b = 0; b < batch; ++b) {
        if (started[b] && earliest[b] <= i) {
          active[b] = 1.0;
          any = true;
        }
      }
      if (any) {
        Tensor evolved = integrate(field, h, ctx.times[i + 1], ctx.times[i], no_ctx, cfg);
        h = blend_rows(active, evolved, h);
      }
    }
    std::vector<double> absorb(batch, 0.0);
    bool any = false;
    for (std::size_t b = 0; b < batch; ++b) {
      if (ctx.is_present(b, i)) {
        absorb[b] = 1.0;
        started[b] = true;
        any = true;
      }
    }
    if (any) {
      h = blend_rows(absorb, gru_cell(enc, recurrent_input(ctx, i, enc.time_input), h), h);
      check_finite(h, "gruode encoder", i);
    }
  }
  return h;
}

std::pair<LatentDist, LatentDist> latent_params(const Tensor& r, const LatentHeads& heads,
                                                LatentFamily family) {
  if (r.cols() != heads.ffw.in_dim()) {
    throw ShapeError("latent_params: representation width " + std::to_string(r.cols()) +
                     " does not match head input " + std::to_string(heads.ffw.in_dim()));
  }
  const std::size_t z = heads.z_dim, d = heads.d_dim;
  Tensor out = heads.ffw(r);
  Tensor mu_l0 = slice(out, 1, 0, z);
  Tensor sigma_l0 = positive_scale(slice(out, 1, z, 2 * z));
  Tensor mu_d = slice(out, 1, 2 * z, 2 * z + d);
  Tensor sigma_d = positive_scale(slice(out, 1, 2 * z + d, 2 * z + 2 * d));
  return {make_latent(family, mu_l0, sigma_l0), make_latent(family, mu_d, sigma_d)};
}

}  // namespace snodep
