#pragma once

// Diagonal Normal, LogNormal and Poisson distributions over batched tensors.
// Parameters are rows x dim tensors (one row per batch element); log-densities
// and KL divergences are summed over the value dimension, giving rows x 1.

#include <string>
#include <variant>

#include "snodep/tensor.hpp"

namespace snodep {

inline constexpr double kSigmaMin = 1e-3;
inline constexpr double kLambdaMin = 1e-6;

struct DiagNormal {
  Tensor mu;
  Tensor sigma;
};

/// Distribution of exp(X) with X ~ DiagNormal(mu, sigma).
struct LogNormalD {
  Tensor mu;
  Tensor sigma;
};

struct PoissonD {
  Tensor lambda;
};

enum class LatentFamily { normal, lognormal };

LatentFamily parse_latent_family(const std::string& name);
std::string to_string(LatentFamily family);

using LatentDist = std::variant<DiagNormal, LogNormalD>;

/// sigma_min + softplus(raw)
Tensor positive_scale(const Tensor& raw);
/// lambda_min + softplus(raw)
Tensor positive_rate(const Tensor& raw);

LatentDist make_latent(LatentFamily family, Tensor mu, Tensor sigma);
LatentFamily family_of(const LatentDist& dist);
const Tensor& latent_mu(const LatentDist& dist);
const Tensor& latent_sigma(const LatentDist& dist);

Tensor reparam_sample(const DiagNormal& dist, const Tensor& noise);
Tensor reparam_sample(const LogNormalD& dist, const Tensor& noise);
Tensor reparam_sample(const LatentDist& dist, const Tensor& noise);

/// Mean of a DiagNormal, median exp(mu) of a LogNormal: the noise = 0 draw.
Tensor central_value(const LatentDist& dist);

Tensor log_prob(const DiagNormal& dist, const Tensor& x);
/// `x` must be strictly positive.
Tensor log_prob(const LogNormalD& dist, const Tensor& x);
/// `counts` must be untracked non-negative integers.
Tensor log_prob(const PoissonD& dist, const Tensor& counts);

Tensor kl_divergence(const DiagNormal& p, const DiagNormal& q);
/// Equal to the KL of the underlying normals.
Tensor kl_divergence(const LogNormalD& p, const LogNormalD& q);
/// Throws DomainError when the families differ.
Tensor kl_divergence(const LatentDist& p, const LatentDist& q);

}  // namespace snodep
