#include <doctest.h>

#include <cmath>
#include <random>

#include "grad_check.hpp"
#include "snodep/distributions.hpp"
#include "snodep/error.hpp"

using namespace snodep;

namespace {
Tensor t1(double v) { return Tensor::constant({1, 1}, {v}); }
}  // namespace

TEST_SUITE("distributions") {
  TEST_CASE("closed-form KL values") {
    const DiagNormal std_normal{t1(0.0), t1(1.0)};
    CHECK(std::abs(kl_divergence(std_normal, std_normal).item()) < 1e-12);
    CHECK(std::abs(kl_divergence(DiagNormal{t1(1.0), t1(1.0)}, std_normal).item() - 0.5) < 1e-12);
    // log(1.3/0.7) + (0.49 + 0.25) / (2 * 1.69) - 0.5
    CHECK(kl_divergence(DiagNormal{t1(0.3), t1(0.7)}, DiagNormal{t1(-0.2), t1(1.3)}).item() ==
          doctest::Approx(0.3379741196488272).epsilon(1e-13));
  }

  TEST_CASE("lognormal KL equals the KL of the underlying normals") {
    const LogNormalD p{t1(0.3), t1(0.7)}, q{t1(-0.2), t1(1.3)};
    CHECK(kl_divergence(p, q).item() ==
          kl_divergence(DiagNormal{t1(0.3), t1(0.7)}, DiagNormal{t1(-0.2), t1(1.3)}).item());
  }

  TEST_CASE("KL is non-negative and sums over dimensions") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2, 2), s(0.1, 3);
    for (int i = 0; i < 100; ++i) {
      const DiagNormal p{Tensor::constant({2, 3}, {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)}),
                         Tensor::constant({2, 3}, {s(rng), s(rng), s(rng), s(rng), s(rng), s(rng)})};
      const DiagNormal q{Tensor::constant({2, 3}, {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)}),
                         Tensor::constant({2, 3}, {s(rng), s(rng), s(rng), s(rng), s(rng), s(rng)})};
      const Tensor kl = kl_divergence(p, q);
      REQUIRE(kl.rows() == 2);
      REQUIRE(kl.cols() == 1);
      for (double v : kl.values()) CHECK(v >= 0.0);
    }
  }

  TEST_CASE("family mismatch fails") {
    const LatentDist a = DiagNormal{t1(0.0), t1(1.0)};
    const LatentDist b = LogNormalD{t1(0.0), t1(1.0)};
    CHECK_THROWS_AS(kl_divergence(a, b), DomainError);
  }

  TEST_CASE("poisson log-probabilities") {
    CHECK(std::abs(log_prob(PoissonD{t1(1.0)}, t1(0.0)).item() + 1.0) < 1e-12);
    // 2 ln 3 - 3 - ln 2!
    const double expected = 2.0 * std::log(3.0) - 3.0 - std::log(2.0);
    CHECK(std::abs(log_prob(PoissonD{t1(3.0)}, t1(2.0)).item() - expected) < 1e-12);
    CHECK(std::abs(expected - -1.4959226032237258) < 1e-15);
    CHECK_THROWS_AS(log_prob(PoissonD{t1(3.0)}, t1(1.5)), DomainError);
    CHECK_THROWS_AS(log_prob(PoissonD{t1(3.0)}, t1(-1.0)), DomainError);
  }

  TEST_CASE("normal and lognormal densities") {
    CHECK(log_prob(DiagNormal{t1(0.1), t1(2.0)}, t1(0.5)).item() ==
          doctest::Approx(-1.632085713764618).epsilon(1e-13));
    CHECK(log_prob(LogNormalD{t1(0.1), t1(0.5)}, t1(2.0)).item() ==
          doctest::Approx(-1.6225856888170975).epsilon(1e-13));
    CHECK_THROWS_AS(log_prob(LogNormalD{t1(0.1), t1(0.5)}, t1(0.0)), DomainError);
    // Gaussian at its mean with the minimum scale.
    CHECK(log_prob(DiagNormal{t1(1.0), t1(kSigmaMin)}, t1(1.0)).item() ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI * kSigmaMin * kSigmaMin)).epsilon(1e-13));
  }

  TEST_CASE("positive transforms keep their floors") {
    const Tensor raw = Tensor::constant({3}, {-800.0, 0.0, 5.0});
    const Tensor scale_t = positive_scale(raw);
    const auto s = scale_t.values();
    CHECK(s[0] >= kSigmaMin);
    CHECK(s[1] == doctest::Approx(kSigmaMin + std::log(2.0)));
    const Tensor rate_t = positive_rate(raw);
    const auto r = rate_t.values();
    CHECK(r[0] >= kLambdaMin);
  }

  TEST_CASE("reparametrized samples and central values") {
    const DiagNormal n{t1(0.5), t1(2.0)};
    CHECK(reparam_sample(n, t1(1.5)).item() == doctest::Approx(3.5));
    const LatentDist ln = LogNormalD{t1(0.5), t1(2.0)};
    CHECK(reparam_sample(ln, t1(0.0)).item() == doctest::Approx(std::exp(0.5)));
    CHECK(central_value(ln).item() == doctest::Approx(std::exp(0.5)));
    CHECK(family_of(ln) == LatentFamily::lognormal);
  }

  TEST_CASE("log-density gradients") {
    Tensor mu = Tensor::parameter({2, 2}, {0.1, -0.4, 0.7, 0.2});
    Tensor raw = Tensor::parameter({2, 2}, {0.3, -1.0, 0.5, 0.0});
    Tensor lam = Tensor::parameter({2, 2}, {0.5, 1.0, -0.3, 2.0});
    const Tensor x = Tensor::constant({2, 2}, {0.5, 1.2, 0.3, 2.0});
    const Tensor k = Tensor::constant({2, 2}, {0, 3, 1, 7});
    auto loss = [&] {
      const Tensor a = sum(log_prob(DiagNormal{mu, positive_scale(raw)}, x));
      const Tensor b = sum(log_prob(LogNormalD{mu, positive_scale(raw)}, x));
      const Tensor c = sum(log_prob(PoissonD{positive_rate(lam)}, k));
      const Tensor d = sum(kl_divergence(DiagNormal{mu, positive_scale(raw)}, DiagNormal{lam, positive_scale(mu)}));
      return add(add(a, b), add(c, d));
    };
    const Gradients g = backward(loss());
    for (Tensor* p : {&mu, &raw, &lam}) {
      const auto grad = g.of(*p);
      for (std::size_t i = 0; i < p->size(); ++i) {
        CHECK(snodep::testing::relative_error(grad[i], snodep::testing::finite_difference(loss, *p, i)) < 1e-4);
      }
    }
  }
}
