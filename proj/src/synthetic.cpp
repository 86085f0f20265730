#include "snodep/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "snodep/error.hpp"
#include "snodep/parameters.hpp"

namespace snodep {

std::array<double, 2> oscillator_state(double t) {
  // Eigenvalues -0.1 +- i: z(t) = e^{-0.1 t} [cos t, -sin t].
  const double decay = std::exp(-0.1 * t);
  return {decay * std::cos(t), -decay * std::sin(t)};
}

namespace {
double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.y_dim == 0 || spec.timesteps == 0 || spec.cells_per_t == 0) {
    throw ValidationError("synthetic: dim, timesteps and cells must be positive");
  }
  if (!(spec.dt > 0.0)) throw ValidationError("synthetic: dt must be positive");
  if (spec.kind == HeadKind::gaussian && !(spec.noise_sd >= 0.0)) {
    throw ValidationError("synthetic: noise_sd must be non-negative");
  }
  Rng rng(spec.seed);
  std::normal_distribution<double> weight_dist(0.0, 1.5);
  std::uniform_real_distribution<double> offset_dist(0.5, 2.5);

  SyntheticData out;
  for (std::size_t g = 0; g < spec.y_dim; ++g) {
    out.weight.push_back({weight_dist(rng), weight_dist(rng)});
    out.offset.push_back(offset_dist(rng));
  }

  TimeSeriesDataset& ds = out.data;
  ds.kind = spec.kind == HeadKind::poisson ? DataKind::expression : DataKind::normalized;
  for (std::size_t g = 0; g < spec.y_dim; ++g) ds.features.push_back("g" + std::to_string(g));

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> cell(spec.y_dim);
  for (std::size_t i = 0; i < spec.timesteps; ++i) {
    const double t = static_cast<double>(i) * spec.dt;
    const auto z = oscillator_state(t);
    std::vector<double> mean(spec.y_dim), sd(spec.y_dim);
    for (std::size_t g = 0; g < spec.y_dim; ++g) {
      const double lin = out.weight[g][0] * z[0] + out.weight[g][1] * z[1] + out.offset[g];
      mean[g] = spec.kind == HeadKind::poisson ? softplus_scalar(lin) : lin;
      sd[g] = spec.kind == HeadKind::poisson ? std::sqrt(mean[g]) : spec.noise_sd;
    }
    SampleMatrix m;
    m.dim = spec.y_dim;
    for (std::size_t j = 0; j < spec.cells_per_t; ++j) {
      for (std::size_t g = 0; g < spec.y_dim; ++g) {
        if (spec.kind == HeadKind::poisson) {
          std::poisson_distribution<long> counts(mean[g]);
          cell[g] = static_cast<double>(counts(rng));
        } else {
          cell[g] = mean[g] + spec.noise_sd * noise(rng);
        }
      }
      m.append(cell, "t" + std::to_string(i) + "_c" + std::to_string(j));
    }
    ds.times.push_back(t);
    ds.steps.push_back(std::move(m));
    out.mean.push_back(std::move(mean));
    out.sd.push_back(std::move(sd));
  }
  ds.validate();
  return out;
}

void write_truth_csv(const SyntheticData& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "time";
  for (const auto& f : data.data.features) out << ",mean_" << f;
  for (const auto& f : data.data.features) out << ",sd_" << f;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.mean.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data.data.times[i]);
    out << buf;
    for (double v : data.mean[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    for (double v : data.sd[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace snodep
