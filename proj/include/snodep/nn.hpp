#pragma once

#include <string>
#include <vector>

#include "snodep/parameters.hpp"
#include "snodep/tensor.hpp"

namespace snodep {

/// y = x W + b with W stored (in x out).
struct Linear {
  Tensor weight;
  Tensor bias;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
  Tensor operator()(const Tensor& x) const;
};

Linear make_linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                   Rng& rng);

/// Fully connected stack with tanh between layers and a linear last layer.
struct Mlp {
  std::vector<Linear> layers;

  Tensor operator()(const Tensor& x) const;
};

/// `dims` lists layer widths from input to output, e.g. {in, 64, 64, out}.
Mlp make_mlp(ParameterStore& store, const std::string& name, const std::vector<std::size_t>& dims,
             Rng& rng);

}  // namespace snodep
