#include <doctest.h>

#include <cmath>

#include "grad_check.hpp"
#include "snodep/error.hpp"
#include "snodep/ode.hpp"

using namespace snodep;

namespace {

const VectorField kZero = [](double, const Tensor& y, const Tensor&) { return Tensor::zeros(y.shape()); };
const VectorField kGrowth = [](double, const Tensor& y, const Tensor&) { return y; };
const VectorField kUnit = [](double, const Tensor& y, const Tensor&) { return Tensor::filled(y.shape(), 1.0); };
const VectorField kRamp = [](double t, const Tensor& y, const Tensor&) { return Tensor::filled(y.shape(), 2.0 * t); };

double endpoint_error(SolverMethod m, int steps) {
  const Tensor y = integrate(kGrowth, Tensor::scalar(1.0), 0.0, 1.0, Tensor{}, {m, steps});
  return std::abs(y.item() - std::exp(1.0));
}

}  // namespace

TEST_SUITE("ode") {
  TEST_CASE("zero field keeps the state") {
    const Tensor y0 = Tensor::constant({2}, {0.3, -4.0});
    const Tensor y = integrate(kZero, y0, 0.0, 3.0, Tensor{}, {});
    CHECK(y.values()[0] == 0.3);
    CHECK(y.values()[1] == -4.0);
  }

  TEST_CASE("exponential growth with rk4") {
    const Tensor y = integrate(kGrowth, Tensor::scalar(1.0), 0.0, 1.0, Tensor{}, {SolverMethod::rk4, 100});
    CHECK(std::abs(y.item() - 2.718281828) < 1e-6);
  }

  TEST_CASE("backward integration") {
    const Tensor y = integrate(kUnit, Tensor::scalar(5.0), 1.0, 0.0, Tensor{}, {SolverMethod::euler, 10});
    CHECK(y.item() == doctest::Approx(4.0).epsilon(1e-12));
  }

  TEST_CASE("degenerate segment returns the initial state") {
    int calls = 0;
    VectorField counting = [&](double, const Tensor& y, const Tensor&) {
      ++calls;
      return y;
    };
    const Tensor y0 = Tensor::scalar(2.0);
    CHECK(integrate(counting, y0, 1.5, 1.5, Tensor{}, {}).item() == 2.0);
    CHECK(calls == 0);
  }

  TEST_CASE("path examples") {
    const Tensor y0 = Tensor::scalar(0.0);
    const std::vector<double> one{0.0};
    CHECK(integrate_path(kRamp, y0, one, Tensor{}, {}).front().item() == 0.0);
    const std::vector<double> times{0.0, 1.0, 2.0};
    const auto states = integrate_path(kRamp, y0, times, Tensor{}, {SolverMethod::rk4, 100});
    REQUIRE(states.size() == 3);
    CHECK(std::abs(states[0].item()) < 1e-12);
    CHECK(std::abs(states[1].item() - 1.0) < 1e-6);
    CHECK(std::abs(states[2].item() - 4.0) < 1e-6);
  }

  TEST_CASE("path endpoint equals a single integration") {
    const std::vector<double> times{0.0, 1.0, 2.0};
    const Tensor y0 = Tensor::scalar(0.5);
    const SolverConfig cfg{SolverMethod::rk4, 10};
    const double a = integrate_path(kGrowth, y0, times, Tensor{}, cfg).back().item();
    const double b = integrate(kGrowth, y0, 0.0, 2.0, Tensor{}, cfg).item();
    CHECK(std::abs(a - b) < 1e-9);
  }

  TEST_CASE("non-ascending times fail") {
    const std::vector<double> times{0.0, 2.0, 1.0};
    CHECK_THROWS_AS(integrate_path(kZero, Tensor::scalar(0.0), times, Tensor{}, {}), ValidationError);
    const std::vector<double> repeated{0.0, 1.0, 1.0};
    CHECK_THROWS_AS(integrate_path(kZero, Tensor::scalar(0.0), repeated, Tensor{}, {}), ValidationError);
  }

  TEST_CASE("blow-up names the step") {
    VectorField explode = [](double, const Tensor& y, const Tensor&) { return scale(exp(y), 1e300); };
    try {
      integrate(explode, Tensor::scalar(1.0), 0.0, 1.0, Tensor{}, {SolverMethod::euler, 10});
      FAIL("expected a numerical failure");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
  }

  TEST_CASE("field output shape is checked") {
    VectorField wrong = [](double, const Tensor&, const Tensor&) { return Tensor::zeros({3}); };
    CHECK_THROWS_AS(integrate(wrong, Tensor::zeros({2}), 0.0, 1.0, Tensor{}, {}), ShapeError);
  }

  TEST_CASE("rk4 convergence order") {
    const double ratio = endpoint_error(SolverMethod::rk4, 8) / endpoint_error(SolverMethod::rk4, 16);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
  }

  TEST_CASE("euler convergence order") {
    const double ratio = endpoint_error(SolverMethod::euler, 256) / endpoint_error(SolverMethod::euler, 512);
    CHECK(ratio >= 1.8);
    CHECK(ratio <= 2.2);
  }

  TEST_CASE("step count rule") {
    CHECK(segment_steps(0.0, 1.0, {SolverMethod::rk4, 10}) == 10);
    CHECK(segment_steps(1.0, 0.0, {SolverMethod::rk4, 10}) == 10);
    CHECK(segment_steps(0.0, 0.25, {SolverMethod::rk4, 10}) == 3);
    CHECK(segment_steps(0.0, 0.01, {SolverMethod::rk4, 10}) == 1);
    CHECK_THROWS_AS(segment_steps(0.0, 1.0, {SolverMethod::rk4, 0}), ValidationError);
    CHECK(parse_solver_method("euler") == SolverMethod::euler);
    CHECK_THROWS_AS(parse_solver_method("dopri"), ValidationError);
  }

  TEST_CASE("gradients flow through the solver") {
    // y' = a * y  =>  y(1) = y0 e^a; dy/da = y0 e^a.
    Tensor a = Tensor::parameter({1}, {0.4});
    VectorField f = [&](double, const Tensor& y, const Tensor&) { return mul(y, a); };
    auto loss = [&] { return sum(integrate(f, Tensor::constant({1}, {2.0}), 0.0, 1.0, Tensor{}, {SolverMethod::rk4, 50})); };
    const double g = backward(loss()).of(a)[0];
    CHECK(g == doctest::Approx(2.0 * std::exp(0.4)).epsilon(1e-7));
    CHECK(snodep::testing::relative_error(g, snodep::testing::finite_difference(loss, a, 0)) < 1e-7);
  }
}
