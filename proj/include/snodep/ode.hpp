#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snodep/tensor.hpp"

namespace snodep {

/// (t, state, static context) -> d state / dt, same shape as state.
using VectorField = std::function<Tensor(double, const Tensor&, const Tensor&)>;

enum class SolverMethod { euler, rk4 };

struct SolverConfig {
  SolverMethod method = SolverMethod::rk4;
  int steps_per_unit = 10;
};

SolverMethod parse_solver_method(const std::string& name);
std::string to_string(SolverMethod method);

/// Number of fixed steps used for a segment of length |t1 - t0|.
int segment_steps(double t0, double t1, const SolverConfig& cfg);

/// y(t1) from y(t0) = y0. Either direction is allowed; t0 == t1 returns y0
/// without evaluating the field. Every step is recorded on the gradient tape.
Tensor integrate(const VectorField& f, const Tensor& y0, double t0, double t1, const Tensor& ctx,
                 const SolverConfig& cfg);

/// States at each of the strictly ascending `times`; times[0] is the time of y0.
std::vector<Tensor> integrate_path(const VectorField& f, const Tensor& y0,
                                   std::span<const double> times, const Tensor& ctx,
                                   const SolverConfig& cfg);

}  // namespace snodep
