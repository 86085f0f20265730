#pragma once

// The four model variants: NP (mean encoder, MLP decoder in time), NODEP (mean
// encoder, neural-ODE decoder), SNODEP (backward LSTM encoder, ODE decoder)
// and SNODEP with a GRU-ODE encoder for irregularly sampled contexts.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "snodep/distributions.hpp"
#include "snodep/encoders.hpp"
#include "snodep/nn.hpp"
#include "snodep/ode.hpp"
#include "snodep/parameters.hpp"

namespace snodep {

enum class ModelKind { np, nodep, snodep, snodep_gruode };
enum class HeadKind { poisson, gaussian };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);
HeadKind parse_head_kind(const std::string& name);
std::string to_string(HeadKind kind);
EncoderKind encoder_for(ModelKind kind);
/// Model kind that uses `encoder` (mean maps to NODEP).
ModelKind model_for_encoder(EncoderKind encoder);

struct ModelConfig {
  ModelKind kind = ModelKind::snodep;
  HeadKind head = HeadKind::gaussian;
  LatentFamily latent = LatentFamily::normal;
  std::size_t y_dim = 1;
  std::size_t r_dim = 64;
  std::size_t z_dim = 32;
  std::size_t d_dim = 32;
  std::size_t hidden = 64;
  bool encoder_time_input = false;
  SolverConfig solver;
  std::uint64_t seed = 0;
};

/// Output distribution at one query time, batch x y_dim parameters.
using OutputDist = std::variant<PoissonD, DiagNormal>;

/// Predicted mean: lambda for Poisson, mu for Gaussian.
const Tensor& output_mean(const OutputDist& dist);
/// Per-row log-likelihood of `y` (batch x 1).
Tensor output_log_prob(const OutputDist& dist, const Tensor& y);

struct LatentDraw {
  Tensor l0;
  Tensor d;
  LatentDist l0_dist;
  LatentDist d_dist;
  double origin = 0.0;
};

using LatentPair = std::pair<LatentDist, LatentDist>;

class ProcessModel {
 public:
  explicit ProcessModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ModelKind kind() const { return config_.kind; }
  EncoderKind encoder_kind() const { return encoder_for(config_.kind); }
  bool has_ode_decoder() const { return config_.kind != ModelKind::np; }

  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  /// Representation r for a context batch (batch x r_dim).
  Tensor represent(const ContextBatch& ctx) const;
  /// Posterior latent distributions {L0, D} given a context.
  LatentPair encode(const ContextBatch& ctx) const;

  /// Reparametrized draw; undefined noise tensors mean the noise = 0 draw.
  LatentDraw draw(const LatentPair& q, double origin, const Tensor& noise_l0 = {},
                  const Tensor& noise_d = {}) const;

  /// Output distributions at strictly ascending query times >= origin.
  std::vector<OutputDist> decode(const LatentDraw& draw, std::span<const double> query_times) const;

  /// Deterministic inference: central draw from q(.|ctx), origin = first context time.
  std::vector<OutputDist> predict(const ContextBatch& ctx, std::span<const double> query_times) const;

  /// f_theta(l, d, t); ODE variants only.
  Tensor decoder_field(double t, const Tensor& l, const Tensor& d) const;
  /// Maps latent states (rows) to output distributions.
  OutputDist output_head(const Tensor& latent) const;

 private:
  ModelConfig config_;
  ParameterStore params_;
  MeanEncoder mean_enc_;
  LstmEncoder lstm_enc_;
  GruOdeEncoder gru_enc_;
  LatentHeads heads_;
  Mlp dynamics_;  // f_theta for ODE variants, time-conditioned MLP for NP
  Mlp head_;
};

}  // namespace snodep
