#include "snodep/parameters.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "snodep/error.hpp"

namespace snodep {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor ParameterStore::add_uniform(const std::string& name, Shape shape, std::size_t fan_in,
                                   Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape_size(shape));
  for (double& v : values) v = dist(rng);
  return add(name, std::move(shape), std::move(values));
}

Tensor ParameterStore::add(const std::string& name, Shape shape, std::vector<double> values) {
  if (contains(name)) throw ValidationError("parameter '" + name + "' registered twice");
  Tensor t = Tensor::parameter(std::move(shape), std::move(values));
  names_.push_back(name);
  tensors_.push_back(t);
  return t;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return tensors_[i];
  }
  throw ValidationError("unknown parameter '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.names_ != names_) throw ValidationError("parameter stores have different layouts");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].shape() != other.tensors_[i].shape()) {
      throw ShapeError("parameter '" + names_[i] + "' shape differs");
    }
    auto dst = tensors_[i].mutable_values();
    auto src = other.tensors_[i].values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void ParameterStore::fill(double value) {
  for (auto& t : tensors_) {
    for (double& v : t.mutable_values()) v = value;
  }
}

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  out << "snodep-checkpoint 1\n" << params.size() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.tensors()[i];
    out << params.names()[i] << ' ' << t.rank();
    for (auto d : t.shape()) out << ' ' << d;
    out << '\n';
    auto v = t.values();
    for (std::size_t j = 0; j < v.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", v[j]);
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing checkpoint " + path.string());
}

void load_checkpoint(ParameterStore& params, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  in >> magic >> version >> count;
  if (magic != "snodep-checkpoint" || version != 1) {
    throw ValidationError(path.string() + ": not a snodep checkpoint");
  }
  if (count != params.size()) {
    throw ValidationError(path.string() + ": holds " + std::to_string(count) +
                          " parameters, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    std::size_t rank = 0;
    in >> name >> rank;
    Shape shape(rank);
    for (auto& d : shape) in >> d;
    if (!in) throw ValidationError(path.string() + ": truncated header for parameter " + std::to_string(i));
    if (name != params.names()[i]) {
      throw ValidationError(path.string() + ": expected parameter '" + params.names()[i] +
                            "', found '" + name + "'");
    }
    Tensor t = params.tensors()[i];
    if (shape != t.shape()) {
      throw ShapeError(path.string() + ": parameter '" + name + "' has shape " + shape_str(shape) +
                       ", model expects " + shape_str(t.shape()));
    }
    auto dst = t.mutable_values();
    for (double& v : dst) {
      std::string tok;
      in >> tok;
      if (!in) throw ValidationError(path.string() + ": truncated values for '" + name + "'");
      v = std::strtod(tok.c_str(), nullptr);
    }
  }
}

}  // namespace snodep
