#pragma once

// Simplified single-cell flux estimation. Each module maps the expression of
// its genes to a positive flux through a small network; per timestep the
// networks are fitted to minimize metabolite imbalance over the factor graph,
// anchored to mean module-gene activity to rule out the all-zero solution.

#include <cstdint>
#include <vector>

#include "snodep/dataset.hpp"
#include "snodep/nn.hpp"
#include "snodep/parameters.hpp"
#include "snodep/pathway.hpp"

namespace snodep {

/// Hop-2 metabolites of each metabolite (those sharing a module), with weights.
struct HopNeighborhood {
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<double>> weights;
};

HopNeighborhood hop2_neighbors(const FactorGraph& graph);

/// Module x metabolite incidence: +1 producer, -1 consumer (summed when both).
std::vector<double> stoichiometry(const FactorGraph& graph);

struct ModuleNet {
  Linear hidden;  // |genes of module| -> 16, tanh
  Linear out;     // 16 -> 1, softplus
};

struct ModuleNets {
  ParameterStore params;
  std::vector<ModuleNet> nets;
};

ModuleNets make_module_nets(const FactorGraph& graph, std::uint64_t seed, std::size_t hidden = 16);

/// Per-cell module fluxes (cells x modules) from expression (cells x genes,
/// columns in pathway gene order).
Tensor module_fluxes(const ModuleNets& nets, const FactorGraph& graph, const Tensor& expression);

/// Mean expression of each module's genes per cell (cells x modules).
Tensor module_activity(const FactorGraph& graph, const Tensor& expression);

/// In-flux minus out-flux per cell and metabolite (cells x metabolites).
Tensor metabolite_balance(const Tensor& flux, const FactorGraph& graph);

/// Balance loss from fluxes: per metabolite squared imbalance plus the
/// weighted imbalance of its hop-2 neighbours, plus
/// lambda_nt * sum (flux - activity)^2.
Tensor balance_loss(const Tensor& flux, const Tensor& activity, const FactorGraph& graph,
                    const HopNeighborhood& hood, double lambda_nt);
/// Same, evaluating the networks on `expression`.
Tensor balance_loss(const ModuleNets& nets, const Tensor& expression, const FactorGraph& graph,
                    const HopNeighborhood& hood, double lambda_nt);

struct ScfeaConfig {
  std::size_t steps = 1000;
  double lr = 1e-2;
  double lambda_nt = 0.1;
  std::size_t hidden = 16;
  std::uint64_t seed = 0;
};

struct FluxEstimate {
  TimeSeriesDataset flux;     // modules per sample
  TimeSeriesDataset balance;  // metabolites per sample
  std::vector<double> initial_loss;  // per timestep
  std::vector<double> final_loss;
};

/// Expression rows of `ds` restricted to the pathway genes, one tensor per
/// timestep (cells x genes).
std::vector<Tensor> pathway_expression(const TimeSeriesDataset& ds, const PathwayDef& pathway);

/// Fits module networks independently per timestep (concurrently, up to
/// thread_limit()) and returns per-sample fluxes and balances.
FluxEstimate estimate_flux_balance(const TimeSeriesDataset& ds, const PathwayDef& pathway,
                                   const ScfeaConfig& cfg);

}  // namespace snodep
