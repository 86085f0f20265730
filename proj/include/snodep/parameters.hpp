#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "snodep/tensor.hpp"

namespace snodep {

using Rng = std::mt19937_64;

/// Independent seed for sub-stream `stream` of `base` (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Named, ordered collection of learnable tensors.
class ParameterStore {
 public:
  /// Registers a parameter initialized uniformly in +-1/sqrt(fan_in).
  Tensor add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);
  Tensor add(const std::string& name, Shape shape, std::vector<double> values);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  /// Copies values from `other`; names and shapes must match exactly.
  void copy_values_from(const ParameterStore& other);
  void fill(double value);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// Checkpoint text format, one block per parameter, in registration order:
//
//   snodep-checkpoint 1
//   <count>
//   <name> <rank> <dim>...
//   <values, space separated, %.17g>
//
// Values round-trip exactly.
void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path);
/// Loads values into an already-built store; names and shapes must match.
void load_checkpoint(ParameterStore& params, const std::filesystem::path& path);

}  // namespace snodep
