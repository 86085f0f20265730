#include "snodep/adam.hpp"

#include <cmath>
#include <string>

#include "snodep/error.hpp"

namespace snodep {

AdamState::AdamState(std::span<const Tensor> params, AdamConfig config) : config_(config) {
  for (const Tensor& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamState::update(std::span<Tensor> params, const Gradients& grads) {
  if (params.size() != m_.size()) {
    throw ShapeError("adam: state tracks " + std::to_string(m_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<double> g = grads.of(params[i]);
    if (g.size() != m_[i].size()) {
      throw ShapeError("adam: gradient of size " + std::to_string(g.size()) + " for parameter " +
                       std::to_string(i) + " of size " + std::to_string(m_[i].size()));
    }
    auto w = params[i].mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void adam_step(AdamState& state, std::span<Tensor> params, const Gradients& grads) {
  state.update(params, grads);
}

}  // namespace snodep
