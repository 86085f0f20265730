#pragma once

// Metabolic factor graph: modules (each a gene subset) and metabolites with
// producing and consuming modules.
//
// JSON form:
//   {"genes": [...],
//    "modules": [{"name": "M1", "genes": [...]}, ...],
//    "metabolites": [{"name": "A", "in_modules": [...], "out_modules": [...]}, ...]}
// `in_modules` produce the metabolite, `out_modules` consume it.

#include <filesystem>
#include <string>
#include <vector>

namespace snodep {

struct ModuleDef {
  std::string name;
  std::vector<std::string> genes;
};

struct MetaboliteDef {
  std::string name;
  std::vector<std::string> in_modules;
  std::vector<std::string> out_modules;
};

struct PathwayDef {
  std::vector<std::string> genes;
  std::vector<ModuleDef> modules;
  std::vector<MetaboliteDef> metabolites;

  /// Throws ValidationError on unknown genes/modules, duplicates, empty
  /// modules or metabolites without any producer or consumer.
  void validate() const;
};

/// Index form of a validated pathway.
struct FactorGraph {
  std::size_t num_genes = 0;
  std::vector<std::vector<std::size_t>> module_genes;  // gene indices per module
  std::vector<std::vector<std::size_t>> producers;     // module indices per metabolite
  std::vector<std::vector<std::size_t>> consumers;

  std::size_t num_modules() const { return module_genes.size(); }
  std::size_t num_metabolites() const { return producers.size(); }
};

FactorGraph build_factor_graph(const PathwayDef& pathway);

PathwayDef parse_pathway_json(const std::string& text);
PathwayDef load_pathway(const std::filesystem::path& path);
std::string pathway_to_json(const PathwayDef& pathway);

/// Linear chain of `modules` modules: metabolite k is produced by module k and
/// consumed by module k + 1, each module reading `genes_per_module` genes.
PathwayDef chain_pathway(std::size_t modules, std::size_t genes_per_module);

}  // namespace snodep
