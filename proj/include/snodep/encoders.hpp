#pragma once

// Context encoders producing the representation r (one row per batch element):
// an order-invariant mean aggregator, a backward LSTM, and a backward GRU-ODE
// that evolves its hidden state between the actual observation times.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "snodep/distributions.hpp"
#include "snodep/nn.hpp"
#include "snodep/ode.hpp"

namespace snodep {

/// A batch of context sequences sharing one time grid. `present` is a
/// batch x length row-major mask; empty means every point is present.
struct ContextBatch {
  std::vector<double> times;
  std::vector<Tensor> values;  // one batch x y_dim tensor per time
  std::vector<std::uint8_t> present;

  std::size_t length() const { return times.size(); }
  std::size_t batch_size() const { return values.empty() ? 0 : values.front().rows(); }
  std::size_t y_dim() const { return values.empty() ? 0 : values.front().cols(); }
  bool is_present(std::size_t b, std::size_t i) const {
    return present.empty() || present[b * length() + i] != 0;
  }
  bool all_present() const;
  std::size_t present_count(std::size_t b) const;

  /// Leading `n` points.
  ContextBatch prefix(std::size_t n) const;
  /// Throws ValidationError unless every element has >= min_present points.
  void validate(std::size_t min_present) const;
};

/// A single context sequence: values is length x y_dim.
struct ContextSet {
  std::vector<double> times;
  Tensor values;
  std::vector<bool> present;  // empty = all present

  ContextBatch as_batch() const;
};

enum class EncoderKind { mean, lstm, gruode };

EncoderKind parse_encoder_kind(const std::string& name);
std::string to_string(EncoderKind kind);

struct EncoderDims {
  std::size_t y_dim = 1;
  std::size_t r_dim = 64;
  std::size_t hidden = 64;
  bool time_input = false;  // recurrent encoders: append t_i to y_i
};

struct MeanEncoder {
  Mlp net;  // [t, y] -> r
};

struct LstmEncoder {
  Linear gates;  // [x, h] -> [input, forget, cell, output]
  std::size_t hidden = 0;
  bool time_input = false;
};

struct GruOdeEncoder {
  Linear update;     // [x, h] -> z
  Linear reset;      // [x, h] -> r
  Linear candidate;  // [x, r * h] -> h~
  Mlp field;         // g_phi: h -> dh/dt
  std::size_t hidden = 0;
  bool time_input = false;
};

struct LatentHeads {
  Linear ffw;  // r -> [mu_l0, raw_sigma_l0, mu_d, raw_sigma_d]
  std::size_t z_dim = 0;
  std::size_t d_dim = 0;
};

MeanEncoder make_mean_encoder(ParameterStore& store, const std::string& name, const EncoderDims& dims,
                              Rng& rng);
LstmEncoder make_lstm_encoder(ParameterStore& store, const std::string& name,
                              const EncoderDims& dims, Rng& rng);
GruOdeEncoder make_gru_ode_encoder(ParameterStore& store, const std::string& name,
                                   const EncoderDims& dims, Rng& rng);
LatentHeads make_latent_heads(ParameterStore& store, const std::string& name, std::size_t r_dim,
                              std::size_t z_dim, std::size_t d_dim, Rng& rng);

/// Mean over present points of MLP([t_i, y_i]).
Tensor np_encode(const ContextBatch& ctx, const MeanEncoder& enc);

/// One LSTM step; returns {h', c'}.
std::pair<Tensor, Tensor> lstm_cell(const LstmEncoder& enc, const Tensor& x, const Tensor& h,
                                    const Tensor& c);
/// Consumes the context from the latest point to the earliest starting from
/// zero state; r is the final hidden state. Requires every point present.
Tensor lstm_encode_backward(const ContextBatch& ctx, const LstmEncoder& enc);

Tensor gru_cell(const GruOdeEncoder& enc, const Tensor& x, const Tensor& h);
/// Backward ODE-RNN: absorb the latest present point into a zero state, then
/// alternately integrate g_phi back to the previous present time and absorb
/// that point. Masked points are skipped entirely.
Tensor gru_ode_encode(const ContextBatch& ctx, const GruOdeEncoder& enc, const SolverConfig& cfg);

/// Returns {L0, D} with sigma = sigma_min + softplus(raw).
std::pair<LatentDist, LatentDist> latent_params(const Tensor& r, const LatentHeads& heads,
                                                LatentFamily family);

}  // namespace snodep
