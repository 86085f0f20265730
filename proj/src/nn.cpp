#include "snodep/nn.hpp"

#include "snodep/error.hpp"

namespace snodep {

Tensor Linear::operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }

Linear make_linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                   Rng& rng) {
  Linear l;
  l.weight = store.add_uniform(name + ".weight", {in, out}, in, rng);
  l.bias = store.add_uniform(name + ".bias", {out}, in, rng);
  return l;
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = tanh(h);
  }
  return h;
}

Mlp make_mlp(ParameterStore& store, const std::string& name, const std::vector<std::size_t>& dims,
             Rng& rng) {
  if (dims.size() < 2) throw ValidationError("mlp '" + name + "' needs at least two widths");
  Mlp m;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    m.layers.push_back(make_linear(store, name + "." + std::to_string(i), dims[i], dims[i + 1], rng));
  }
  return m;
}

}  // namespace snodep
