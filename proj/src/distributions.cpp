#include "snodep/distributions.hpp"

#include <cmath>
#include <numbers>

#include "snodep/error.hpp"

namespace snodep {

namespace {

void same_shape(const char* what, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

Tensor normal_log_density(const Tensor& mu, const Tensor& sigma, const Tensor& x) {
  same_shape("log_prob", mu, x);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Tensor z = div(sub(x, mu), sigma);
  Tensor per_dim = add_scalar(neg(add(scale(square(z), 0.5), log(sigma))), -half_log_2pi);
  return row_sum(per_dim);
}

Tensor normal_kl(const Tensor& mu_p, const Tensor& sigma_p, const Tensor& mu_q,
                 const Tensor& sigma_q) {
  same_shape("kl_divergence", mu_p, mu_q);
  // log(sq/sp) + (sp^2 + (mp - mq)^2) / (2 sq^2) - 1/2
  Tensor var_q = square(sigma_q);
  Tensor num = add(square(sigma_p), square(sub(mu_p, mu_q)));
  Tensor per_dim = add_scalar(
      add(sub(log(sigma_q), log(sigma_p)), div(num, scale(var_q, 2.0))), -0.5);
  return row_sum(per_dim);
}

}  // namespace

LatentFamily parse_latent_family(const std::string& name) {
  if (name == "normal") return LatentFamily::normal;
  if (name == "lognormal") return LatentFamily::lognormal;
  throw ValidationError("unknown latent family '" + name + "' (expected normal or lognormal)");
}

std::string to_string(LatentFamily family) {
  return family == LatentFamily::normal ? "normal" : "lognormal";
}

Tensor positive_scale(const Tensor& raw) { return add_scalar(softplus(raw), kSigmaMin); }
Tensor positive_rate(const Tensor& raw) { return add_scalar(softplus(raw), kLambdaMin); }

LatentDist make_latent(LatentFamily family, Tensor mu, Tensor sigma) {
  same_shape("latent", mu, sigma);
  if (family == LatentFamily::normal) return DiagNormal{std::move(mu), std::move(sigma)};
  return LogNormalD{std::move(mu), std::move(sigma)};
}

LatentFamily family_of(const LatentDist& dist) {
  return std::holds_alternative<DiagNormal>(dist) ? LatentFamily::normal : LatentFamily::lognormal;
}

const Tensor& latent_mu(const LatentDist& dist) {
  return std::visit([](const auto& d) -> const Tensor& { return d.mu; }, dist);
}

const Tensor& latent_sigma(const LatentDist& dist) {
  return std::visit([](const auto& d) -> const Tensor& { return d.sigma; }, dist);
}

Tensor reparam_sample(const DiagNormal& dist, const Tensor& noise) {
  same_shape("reparam_sample", dist.mu, noise);
  return add(dist.mu, mul(dist.sigma, noise));
}

Tensor reparam_sample(const LogNormalD& dist, const Tensor& noise) {
  same_shape("reparam_sample", dist.mu, noise);
  return exp(add(dist.mu, mul(dist.sigma, noise)));
}

Tensor reparam_sample(const LatentDist& dist, const Tensor& noise) {
  return std::visit([&](const auto& d) { return reparam_sample(d, noise); }, dist);
}

Tensor central_value(const LatentDist& dist) {
  if (const auto* n = std::get_if<DiagNormal>(&dist)) return n->mu;
  return exp(std::get<LogNormalD>(dist).mu);
}

Tensor log_prob(const DiagNormal& dist, const Tensor& x) {
  return normal_log_density(dist.mu, dist.sigma, x);
}

Tensor log_prob(const LogNormalD& dist, const Tensor& x) {
  auto xv = x.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (!(xv[i] > 0.0)) {
      throw DomainError("lognormal log_prob: non-positive value " + std::to_string(xv[i]) +
                        " at index " + std::to_string(i));
    }
  }
  Tensor log_x = log(x);
  return sub(normal_log_density(dist.mu, dist.sigma, log_x), row_sum(log_x));
}

Tensor log_prob(const PoissonD& dist, const Tensor& counts) {
  same_shape("poisson log_prob", dist.lambda, counts);
  if (counts.tracked()) throw DomainError("poisson log_prob: counts must be data, not tracked");
  auto cv = counts.values();
  for (std::size_t i = 0; i < cv.size(); ++i) {
    if (!(cv[i] >= 0.0) || std::floor(cv[i]) != cv[i]) {
      throw DomainError("poisson log_prob: expected a non-negative integer count at index " +
                        std::to_string(i) + ", got " + std::to_string(cv[i]));
    }
  }
  // k log(lambda) - lambda - ln k!
  Tensor per_dim = sub(sub(mul(counts, log(dist.lambda)), dist.lambda), lgamma_int(counts));
  return row_sum(per_dim);
}

Tensor kl_divergence(const DiagNormal& p, const DiagNormal& q) {
  return normal_kl(p.mu, p.sigma, q.mu, q.sigma);
}

Tensor kl_divergence(const LogNormalD& p, const LogNormalD& q) {
  return normal_kl(p.mu, p.sigma, q.mu, q.sigma);
}

Tensor kl_divergence(const LatentDist& p, const LatentDist& q) {
  if (p.index() != q.index()) {
    throw DomainError("kl_divergence: family mismatch (" + to_string(family_of(p)) + " vs " +
                      to_string(family_of(q)) + ")");
  }
  if (const auto* n = std::get_if<DiagNormal>(&p)) return kl_divergence(*n, std::get<DiagNormal>(q));
  return kl_divergence(std::get<LogNormalD>(p), std::get<LogNormalD>(q));
}

}  // namespace snodep
