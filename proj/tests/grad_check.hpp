#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "snodep/tensor.hpp"

namespace snodep::testing {

/// Central finite difference of `loss` w.r.t. entry `i` of parameter `p`.
inline double finite_difference(const std::function<Tensor()>& loss, Tensor& p, std::size_t i,
                                double h = 1e-5) {
  auto v = p.mutable_values();
  const double saved = v[i];
  v[i] = saved + h;
  const double up = loss().item();
  v[i] = saved - h;
  const double down = loss().item();
  v[i] = saved;
  return (up - down) / (2.0 * h);
}

/// |a - n| / max(|a|, |n|, floor): relative error, with an absolute floor so
/// vanishing gradients compare on round-off scale.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace snodep::testing
