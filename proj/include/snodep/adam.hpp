#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snodep/tensor.hpp"

namespace snodep {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for a fixed parameter list.
class AdamState {
 public:
  AdamState(std::span<const Tensor> params, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  std::span<const double> first_moment(std::size_t i) const { return m_[i]; }
  std::span<const double> second_moment(std::size_t i) const { return v_[i]; }

  /// One bias-corrected Adam update of `params` in place. A parameter the
  /// loss did not reach has a zero gradient.
  void update(std::span<Tensor> params, const Gradients& grads);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Free-function form of AdamState::update.
void adam_step(AdamState& state, std::span<Tensor> params, const Gradients& grads);

}  // namespace snodep
