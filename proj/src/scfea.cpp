#include "snodep/scfea.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "snodep/adam.hpp"
#include "snodep/error.hpp"
#include "snodep/parallel.hpp"

namespace snodep {

HopNeighborhood hop2_neighbors(const FactorGraph& graph) {
  const std::size_t v = graph.num_metabolites();
  std::vector<std::vector<std::size_t>> touching(graph.num_modules());
  for (std::size_t k = 0; k < v; ++k) {
    for (std::size_t m : graph.producers[k]) touching[m].push_back(k);
    for (std::size_t m : graph.consumers[k]) touching[m].push_back(k);
  }
  HopNeighborhood hood;
  hood.neighbors.resize(v);
  hood.weights.resize(v);
  for (std::size_t k = 0; k < v; ++k) {
    std::vector<char> seen(v, 0);
    auto visit = [&](std::size_t m) {
      for (std::size_t other : touching[m]) {
        if (other != k) seen[other] = 1;
      }
    };
    for (std::size_t m : graph.producers[k]) visit(m);
    for (std::size_t m : graph.consumers[k]) visit(m);
    for (std::size_t other = 0; other < v; ++other) {
      if (seen[other]) {
        hood.neighbors[k].push_back(other);
        hood.weights[k].push_back(1.0);
      }
    }
  }
  return hood;
}

std::vector<double> stoichiometry(const FactorGraph& graph) {
  const std::size_t u = graph.num_modules(), v = graph.num_metabolites();
  std::vector<double> s(u * v, 0.0);
  for (std::size_t k = 0; k < v; ++k) {
    for (std::size_t m : graph.producers[k]) s[m * v + k] += 1.0;
    for (std::size_t m : graph.consumers[k]) s[m * v + k] -= 1.0;
  }
  return s;
}

ModuleNets make_module_nets(const FactorGraph& graph, std::uint64_t seed, std::size_t hidden) {
  ModuleNets out;
  Rng rng(seed);
  for (std::size_t m = 0; m < graph.num_modules(); ++m) {
    const std::string name = "module" + std::to_string(m);
    ModuleNet net;
    net.hidden = make_linear(out.params, name + ".hidden", graph.module_genes[m].size(), hidden, rng);
    net.out = make_linear(out.params, name + ".out", hidden, 1, rng);
    out.nets.push_back(std::move(net));
  }
  return out;
}

namespace {

void check_expression(const FactorGraph& graph, const Tensor& expression) {
  if (expression.rank() != 2 || expression.cols() != graph.num_genes) {
    throw ShapeError("scfea: expression must be cells x " + std::to_string(graph.num_genes) +
                     " (pathway genes), got " + shape_str(expression.shape()));
  }
}

Tensor gather_columns(const Tensor& x, const std::vector<std::size_t>& cols) {
  const std::size_t rows = x.rows(), n = x.cols();
  std::vector<double> out(rows * cols.size());
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out[r * cols.size() + c] = v[r * n + cols[c]];
  }
  return Tensor::constant({rows, cols.size()}, std::move(out));
}

}  // namespace

Tensor module_fluxes(const ModuleNets& nets, const FactorGraph& graph, const Tensor& expression) {
  check_expression(graph, expression);
  if (expression.tracked()) throw DomainError("scfea: expression must be constant data");
  if (nets.nets.size() != graph.num_modules()) throw ShapeError("scfea: network count != module count");
  std::vector<Tensor> cols;
  for (std::size_t m = 0; m < graph.num_modules(); ++m) {
    const ModuleNet& net = nets.nets[m];
    Tensor x = gather_columns(expression, graph.module_genes[m]);
    cols.push_back(softplus(net.out(tanh(net.hidden(x)))));
  }
  return cols.size() == 1 ? cols[0] : concat(cols, 1);
}

Tensor module_activity(const FactorGraph& graph, const Tensor& expression) {
  check_expression(graph, expression);
  const std::size_t rows = expression.rows(), u = graph.num_modules();
  std::vector<double> out(rows * u, 0.0);
  const auto v = expression.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t m = 0; m < u; ++m) {
      double s = 0.0;
      for (std::size_t g : graph.module_genes[m]) s += v[r * graph.num_genes + g];
      out[r * u + m] = s / static_cast<double>(graph.module_genes[m].size());
    }
  }
  return Tensor::constant({rows, u}, std::move(out));
}

Tensor metabolite_balance(const Tensor& flux, const FactorGraph& graph) {
  if (flux.rank() != 2 || flux.cols() != graph.num_modules()) {
    throw ShapeError("scfea: flux must be cells x " + std::to_string(graph.num_modules()) + ", got " +
                     shape_str(flux.shape()));
  }
  if (graph.num_metabolites() == 0) throw ValidationError("scfea: pathway has no metabolites");
  return matmul(flux, Tensor::constant({graph.num_modules(), graph.num_metabolites()},
                                       stoichiometry(graph)));
}

Tensor balance_loss(const Tensor& flux, const Tensor& activity, const FactorGraph& graph,
                    const HopNeighborhood& hood, double lambda_nt) {
  if (activity.shape() != flux.shape()) {
    throw ShapeError("scfea: activity " + shape_str(activity.shape()) + " vs flux " +
                     shape_str(flux.shape()));
  }
  const std::size_t v = graph.num_metabolites();
  if (hood.neighbors.size() != v) throw ShapeError("scfea: neighbourhood does not match graph");
  Tensor loss = Tensor::scalar(0.0);
  if (v > 0) {
    // Each metabolite's squared imbalance counts once for itself and once
    // (weighted) for every metabolite listing it as a hop-2 neighbour.
    std::vector<double> multiplicity(v, 1.0);
    for (std::size_t k = 0; k < v; ++k) {
      for (std::size_t i = 0; i < hood.neighbors[k].size(); ++i) {
        multiplicity[hood.neighbors[k][i]] += hood.weights[k][i];
      }
    }
    Tensor sq = square(metabolite_balance(flux, graph));
    loss = sum(mul(sq, Tensor::constant({v}, multiplicity)));
  }
  if (lambda_nt != 0.0) loss = add(loss, scale(sum(square(sub(flux, activity))), lambda_nt));
  return loss;
}

Tensor balance_loss(const ModuleNets& nets, const Tensor& expression, const FactorGraph& graph,
                    const HopNeighborhood& hood, double lambda_nt) {
  return balance_loss(module_fluxes(nets, graph, expression), module_activity(graph, expression),
                      graph, hood, lambda_nt);
}

std::vector<Tensor> pathway_expression(const TimeSeriesDataset& ds, const PathwayDef& pathway) {
  std::unordered_map<std::string, std::size_t> feature_idx;
  for (std::size_t f = 0; f < ds.features.size(); ++f) feature_idx.emplace(ds.features[f], f);
  std::vector<std::size_t> cols;
  for (const auto& g : pathway.genes) {
    auto it = feature_idx.find(g);
    if (it == feature_idx.end()) {
      throw ValidationError("pathway gene '" + g + "' is not a feature of the dataset");
    }
    cols.push_back(it->second);
  }
  std::vector<Tensor> out;
  for (const auto& s : ds.steps) {
    std::vector<double> v(s.count() * cols.size());
    for (std::size_t j = 0; j < s.count(); ++j) {
      for (std::size_t c = 0; c < cols.size(); ++c) v[j * cols.size() + c] = s.at(cols[c], j);
    }
    out.push_back(Tensor::constant({s.count(), cols.size()}, std::move(v)));
  }
  return out;
}

FluxEstimate estimate_flux_balance(const TimeSeriesDataset& ds, const PathwayDef& pathway,
                                   const ScfeaConfig& cfg) {
  ds.validate();
  if (ds.kind == DataKind::flux || ds.kind == DataKind::balance) {
    throw ValidationError("estimate_flux_balance expects expression data, got kind '" +
                          to_string(ds.kind) + "'");
  }
  if (cfg.hidden == 0) throw ValidationError("scfea.hidden must be positive");
  if (!(cfg.lr >= 0.0)) throw ValidationError("scfea.lr must be non-negative");
  if (!(cfg.lambda_nt >= 0.0)) throw ValidationError("scfea.lambda_nt must be non-negative");
  const FactorGraph graph = build_factor_graph(pathway);
  if (graph.num_metabolites() == 0) throw ValidationError("scfea: pathway has no metabolites");
  const HopNeighborhood hood = hop2_neighbors(graph);
  const std::vector<Tensor> expr = pathway_expression(ds, pathway);
  const std::size_t steps = ds.num_timesteps();

  std::vector<Tensor> flux(steps);
  std::vector<double> initial(steps), final_loss(steps);
  parallel_for(steps, [&](std::size_t t) {
    ModuleNets nets = make_module_nets(graph, derive_seed(cfg.seed, t), cfg.hidden);
    std::vector<Tensor> params = nets.params.tensors();
    AdamState adam(params, AdamConfig{.lr = cfg.lr});
    const Tensor activity = module_activity(graph, expr[t]);
    auto check = [&](double v, std::size_t step) {
      if (!std::isfinite(v)) {
        throw NumericalError("flux estimation diverged at timestep " + std::to_string(t) + " (t=" +
                             std::to_string(ds.times[t]) + "), step " + std::to_string(step));
      }
    };
    for (std::size_t step = 0; step < cfg.steps; ++step) {
      Tensor loss = balance_loss(module_fluxes(nets, graph, expr[t]), activity, graph, hood, cfg.lambda_nt);
      check(loss.item(), step);
      if (step == 0) initial[t] = loss.item();
      adam.update(params, backward(loss));
    }
    Tensor f = module_fluxes(nets, graph, expr[t]);
    const double last = balance_loss(f, activity, graph, hood, cfg.lambda_nt).item();
    check(last, cfg.steps);
    if (cfg.steps == 0) initial[t] = last;
    final_loss[t] = last;
    flux[t] = f.detach();
  });

  FluxEstimate out;
  out.initial_loss = std::move(initial);
  out.final_loss = std::move(final_loss);
  out.flux.kind = DataKind::flux;
  out.balance.kind = DataKind::balance;
  for (const auto& m : pathway.modules) out.flux.features.push_back(m.name);
  for (const auto& m : pathway.metabolites) out.balance.features.push_back(m.name);
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor bal = metabolite_balance(flux[t], graph);
    SampleMatrix fm, bm;
    fm.dim = graph.num_modules();
    bm.dim = graph.num_metabolites();
    fm.data.assign(flux[t].values().begin(), flux[t].values().end());
    bm.data.assign(bal.values().begin(), bal.values().end());
    fm.ids = ds.steps[t].ids;
    bm.ids = ds.steps[t].ids;
    out.flux.times.push_back(ds.times[t]);
    out.balance.times.push_back(ds.times[t]);
    out.flux.steps.push_back(std::move(fm));
    out.balance.steps.push_back(std::move(bm));
  }
  return out;
}

}  // namespace snodep
