#include "snodep/knockout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "snodep/error.hpp"
#include "snodep/parameters.hpp"

namespace snodep {

FluxEstimator scfea_estimator(const ScfeaConfig& cfg) {
  return [cfg](const TimeSeriesDataset& ds, const PathwayDef& p) {
    return estimate_flux_balance(ds, p, cfg);
  };
}

std::vector<std::size_t> KnockoutDataset::train_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < configurations.size(); ++s) {
    if (!configurations[s].test) out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> KnockoutDataset::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < configurations.size(); ++s) {
    if (configurations[s].test) out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> top_expressed(const TimeSeriesDataset& ds, std::size_t k) {
  if (k == 0 || k > ds.dim()) {
    throw ValidationError("knockout: k must lie in [1, " + std::to_string(ds.dim()) + "], got " +
                          std::to_string(k));
  }
  std::vector<double> total(ds.dim(), 0.0);
  for (const auto& s : ds.steps) {
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t f = 0; f < ds.dim(); ++f) total[f] += s.at(f, j);
    }
  }
  std::vector<std::size_t> idx(ds.dim());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return total[a] > total[b]; });
  idx.resize(k);
  return idx;
}

TimeSeriesDataset knock_out(const TimeSeriesDataset& ds, const std::vector<std::size_t>& features) {
  TimeSeriesDataset out = ds;
  for (auto& s : out.steps) {
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t f : features) s.data[j * s.dim + f] = 0.0;
    }
  }
  return out;
}

TimeSeriesDataset append_indicator(const TimeSeriesDataset& ds, const std::vector<double>& indicator,
                                   const std::vector<std::string>& genes) {
  if (indicator.size() != genes.size()) throw ShapeError("knockout: indicator/gene count mismatch");
  TimeSeriesDataset out;
  out.kind = ds.kind;
  out.times = ds.times;
  out.features = ds.features;
  for (const auto& g : genes) out.features.push_back("ko_" + g);
  out.knockout_dims = ds.knockout_dims + genes.size();
  std::vector<double> row;
  for (const auto& s : ds.steps) {
    SampleMatrix m;
    m.dim = out.features.size();
    for (std::size_t j = 0; j < s.count(); ++j) {
      auto v = s.sample(j);
      row.assign(v.begin(), v.end());
      row.insert(row.end(), indicator.begin(), indicator.end());
      m.append(row, s.ids[j]);
    }
    out.steps.push_back(std::move(m));
  }
  return out;
}

KnockoutDataset knockout_generate(const TimeSeriesDataset& expression, const PathwayDef& pathway,
                                  const KnockoutConfig& cfg, const FluxEstimator& estimator) {
  if (expression.kind != DataKind::expression) {
    throw ValidationError("knockout expects raw expression counts, got kind '" +
                          to_string(expression.kind) + "'");
  }
  if (cfg.subsets < 2) throw ValidationError("knockout.subsets must be >= 2 for a train/test split");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    throw ValidationError("knockout.test_fraction must lie in (0, 1)");
  }
  pathway.validate();
  const TimeSeriesDataset genes = select_features(expression, pathway.genes);
  genes.validate();
  KnockoutDataset out;
  out.genes = pathway.genes;
  out.top_genes = top_expressed(genes, cfg.k);

  Rng rng(cfg.seed);
  const std::size_t max_size = std::max<std::size_t>(1, cfg.k / 2);
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t s = 0; s < cfg.subsets; ++s) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt <= cfg.max_redraws && !placed; ++attempt) {
      std::uniform_int_distribution<std::size_t> size_dist(1, max_size);
      std::vector<std::size_t> pool = out.top_genes;
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(size_dist(rng));
      std::sort(pool.begin(), pool.end());
      if (seen.insert(pool).second) {
        subsets.push_back(std::move(pool));
        placed = true;
      }
    }
    if (!placed) {
      throw ValidationError("knockout: could not draw a new distinct gene subset for configuration " +
                            std::to_string(s) + " after " + std::to_string(cfg.max_redraws) +
                            " redraws (k=" + std::to_string(cfg.k) + ")");
    }
  }

  std::vector<std::size_t> order(cfg.subsets);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(cfg.subsets)));
  n_test = std::clamp<std::size_t>(n_test, 1, cfg.subsets - 1);
  std::vector<bool> is_test(cfg.subsets, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  for (std::size_t s = 0; s < cfg.subsets; ++s) {
    KnockoutConfiguration c;
    c.knocked = subsets[s];
    c.indicator.assign(pathway.genes.size(), 1.0);
    for (std::size_t g : c.knocked) c.indicator[g] = 0.0;
    c.test = is_test[s];
    FluxEstimate est = estimator(knock_out(genes, c.knocked), pathway);
    c.flux = append_indicator(est.flux, c.indicator, pathway.genes);
    c.balance = append_indicator(est.balance, c.indicator, pathway.genes);
    out.configurations.push_back(std::move(c));
  }
  return out;
}

TimeSeriesDataset pool_configurations(const KnockoutDataset& ko, const std::vector<std::size_t>& which,
                                      bool balance) {
  if (which.empty()) throw ValidationError("knockout: no configurations to pool");
  TimeSeriesDataset out;
  for (std::size_t n = 0; n < which.size(); ++n) {
    const auto& c = ko.configurations.at(which[n]);
    const TimeSeriesDataset& ds = balance ? c.balance : c.flux;
    if (n == 0) {
      out = ds;
      for (auto& s : out.steps) s = SampleMatrix{s.dim, {}, {}};
    }
    if (ds.times != out.times || ds.features != out.features) {
      throw ValidationError("knockout: configurations disagree on times or features");
    }
    for (std::size_t t = 0; t < ds.num_timesteps(); ++t) {
      const auto& s = ds.steps[t];
      for (std::size_t j = 0; j < s.count(); ++j) {
        out.steps[t].append(s.sample(j), "s" + std::to_string(which[n]) + ":" + s.ids[j]);
      }
    }
  }
  return out;
}

}  // namespace snodep
