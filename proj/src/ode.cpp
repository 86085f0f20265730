#include "snodep/ode.hpp"

#include <cmath>

#include "snodep/error.hpp"

namespace snodep {

namespace {

void check_finite(const Tensor& y, int step) {
  for (double v : y.values()) {
    if (!std::isfinite(v)) {
      throw NumericalError("ode: non-finite state after step " + std::to_string(step));
    }
  }
}

Tensor checked_field(const VectorField& f, double t, const Tensor& y, const Tensor& ctx) {
  Tensor dy = f(t, y, ctx);
  if (dy.rows() != y.rows() || dy.cols() != y.cols()) {
    throw ShapeError("ode: vector field returned " + shape_str(dy.shape()) + " for state " +
                     shape_str(y.shape()));
  }
  return dy;
}

}  // namespace

SolverMethod parse_solver_method(const std::string& name) {
  if (name == "euler") return SolverMethod::euler;
  if (name == "rk4") return SolverMethod::rk4;
  throw ValidationError("unknown solver method '" + name + "' (expected euler or rk4)");
}

std::string to_string(SolverMethod method) { return method == SolverMethod::euler ? "euler" : "rk4"; }

int segment_steps(double t0, double t1, const SolverConfig& cfg) {
  if (cfg.steps_per_unit < 1) throw ValidationError("solver.steps_per_unit must be >= 1");
  const double exact = std::abs(t1 - t0) * cfg.steps_per_unit;
  return std::max(1, static_cast<int>(std::ceil(exact - 1e-9)));
}

Tensor integrate(const VectorField& f, const Tensor& y0, double t0, double t1, const Tensor& ctx,
                 const SolverConfig& cfg) {
  if (t0 == t1) return y0;
  const int n = segment_steps(t0, t1, cfg);
  const double h = (t1 - t0) / n;
  Tensor y = y0;
  for (int k = 0; k < n; ++k) {
    const double t = t0 + k * h;
    if (cfg.method == SolverMethod::euler) {
      y = add(y, scale(checked_field(f, t, y, ctx), h));
    } else {
      Tensor k1 = checked_field(f, t, y, ctx);
      Tensor k2 = checked_field(f, t + 0.5 * h, add(y, scale(k1, 0.5 * h)), ctx);
      Tensor k3 = checked_field(f, t + 0.5 * h, add(y, scale(k2, 0.5 * h)), ctx);
      Tensor k4 = checked_field(f, t + h, add(y, scale(k3, h)), ctx);
      Tensor incr = add(add(k1, scale(k2, 2.0)), add(scale(k3, 2.0), k4));
      y = add(y, scale(incr, h / 6.0));
    }
    check_finite(y, k);
  }
  return y;
}

std::vector<Tensor> integrate_path(const VectorField& f, const Tensor& y0,
                                   std::span<const double> times, const Tensor& ctx,
                                   const SolverConfig& cfg) {
  if (times.empty()) throw ValidationError("integrate_path: empty time list");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw ValidationError("integrate_path: times must be strictly ascending (index " +
                            std::to_string(i) + ")");
    }
  }
  std::vector<Tensor> states{y0};
  for (std::size_t i = 1; i < times.size(); ++i) {
    states.push_back(integrate(f, states.back(), times[i - 1], times[i], ctx, cfg));
  }
  return states;
}

}  // namespace snodep
