#include "snodep/pathway.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "snodep/error.hpp"

namespace snodep {

namespace {

template <class Names>
std::unordered_map<std::string, std::size_t> index_names(const Names& names, const char* what) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!idx.emplace(names[i], i).second) {
      throw ValidationError(std::string("pathway: duplicate ") + what + " '" + names[i] + "'");
    }
  }
  return idx;
}

std::vector<std::string> module_names(const PathwayDef& p) {
  std::vector<std::string> out;
  for (const auto& m : p.modules) out.push_back(m.name);
  return out;
}

}  // namespace

void PathwayDef::validate() const { (void)build_factor_graph(*this); }

FactorGraph build_factor_graph(const PathwayDef& p) {
  if (p.genes.empty()) throw ValidationError("pathway: no genes");
  if (p.modules.empty()) throw ValidationError("pathway: no modules");
  const auto gene_idx = index_names(p.genes, "gene");
  const auto mod_idx = index_names(module_names(p), "module");
  std::vector<std::string> met_names;
  for (const auto& m : p.metabolites) met_names.push_back(m.name);
  (void)index_names(met_names, "metabolite");

  FactorGraph g;
  g.num_genes = p.genes.size();
  for (const auto& m : p.modules) {
    if (m.genes.empty()) throw ValidationError("pathway: module '" + m.name + "' has no genes");
    std::vector<std::size_t> genes;
    for (const auto& name : m.genes) {
      auto it = gene_idx.find(name);
      if (it == gene_idx.end()) {
        throw ValidationError("pathway: module '" + m.name + "' uses unknown gene '" + name + "'");
      }
      genes.push_back(it->second);
    }
    g.module_genes.push_back(std::move(genes));
  }
  auto resolve = [&](const MetaboliteDef& met, const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    for (const auto& name : names) {
      auto it = mod_idx.find(name);
      if (it == mod_idx.end()) {
        throw ValidationError("pathway: metabolite '" + met.name + "' references unknown module '" +
                              name + "'");
      }
      out.push_back(it->second);
    }
    return out;
  };
  for (const auto& met : p.metabolites) {
    if (met.in_modules.empty() && met.out_modules.empty()) {
      throw ValidationError("pathway: metabolite '" + met.name + "' has no producer or consumer");
    }
    g.producers.push_back(resolve(met, met.in_modules));
    g.consumers.push_back(resolve(met, met.out_modules));
  }
  return g;
}

PathwayDef parse_pathway_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pathway: invalid JSON: ") + e.what());
  }
  PathwayDef p;
  try {
    p.genes = j.at("genes").get<std::vector<std::string>>();
    for (const auto& m : j.at("modules")) {
      p.modules.push_back({m.at("name").get<std::string>(), m.at("genes").get<std::vector<std::string>>()});
    }
    for (const auto& m : j.value("metabolites", nlohmann::json::array())) {
      p.metabolites.push_back({m.at("name").get<std::string>(),
                               m.value("in_modules", std::vector<std::string>{}),
                               m.value("out_modules", std::vector<std::string>{})});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pathway: malformed document: ") + e.what());
  }
  p.validate();
  return p;
}

PathwayDef load_pathway(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pathway_json(ss.str());
}

std::string pathway_to_json(const PathwayDef& p) {
  nlohmann::json j;
  j["genes"] = p.genes;
  j["modules"] = nlohmann::json::array();
  for (const auto& m : p.modules) j["modules"].push_back({{"name", m.name}, {"genes", m.genes}});
  j["metabolites"] = nlohmann::json::array();
  for (const auto& m : p.metabolites) {
    j["metabolites"].push_back(
        {{"name", m.name}, {"in_modules", m.in_modules}, {"out_modules", m.out_modules}});
  }
  return j.dump(2);
}

PathwayDef chain_pathway(std::size_t modules, std::size_t genes_per_module) {
  if (modules < 2 || genes_per_module == 0) {
    throw ValidationError("chain pathway needs >= 2 modules and >= 1 gene per module");
  }
  PathwayDef p;
  for (std::size_t m = 0; m < modules; ++m) {
    ModuleDef mod{"M" + std::to_string(m + 1), {}};
    for (std::size_t k = 0; k < genes_per_module; ++k) {
      const std::string gene = "G" + std::to_string(m * genes_per_module + k + 1);
      p.genes.push_back(gene);
      mod.genes.push_back(gene);
    }
    p.modules.push_back(std::move(mod));
  }
  for (std::size_t m = 0; m + 1 < modules; ++m) {
    p.metabolites.push_back({"C" + std::to_string(m + 1), {p.modules[m].name}, {p.modules[m + 1].name}});
  }
  return p;
}

}  // namespace snodep
