#include "snodep/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "snodep/error.hpp"

namespace snodep {

namespace {

using nlohmann::json;

struct Field {
  std::function<void(const json&)> read;
  std::function<json()> write;
};

using Section = std::map<std::string, Field>;

template <class T>
Field bind_field(T& slot, const std::string& key) {
  return {[&slot, key](const json& v) {
            try {
              if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, int>) {
                if (!v.is_number_integer()) throw ValidationError("");
                const auto n = v.get<long long>();
                if (n < 0) throw ValidationError("");
                slot = static_cast<T>(n);
              } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ValidationError("");
                slot = v.get<double>();
              } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ValidationError("");
                slot = v.get<bool>();
              } else {
                if (!v.is_string()) throw ValidationError("");
                slot = v.get<std::string>();
              }
            } catch (const std::exception&) {
              throw ValidationError("config: bad value for '" + key + "': " + v.dump());
            }
          },
          [&slot] { return json(slot); }};
}

std::map<std::string, Section> sections(RunConfig& c) {
  std::map<std::string, Section> s;
  auto add = [&](const std::string& sec, const std::string& key, Field f) { s[sec][key] = std::move(f); };
#define SNODEP_FIELD(sec, key) add(#sec, #key, bind_field(c.sec.key, #sec "." #key))
  SNODEP_FIELD(model, kind);
  SNODEP_FIELD(model, encoder);
  SNODEP_FIELD(model, head);
  SNODEP_FIELD(model, latent);
  SNODEP_FIELD(model, r_dim);
  SNODEP_FIELD(model, z_dim);
  SNODEP_FIELD(model, d_dim);
  SNODEP_FIELD(model, hidden);
  SNODEP_FIELD(model, encoder_time_input);
  SNODEP_FIELD(train, steps);
  SNODEP_FIELD(train, batch_size);
  SNODEP_FIELD(train, lr);
  SNODEP_FIELD(train, kl_weight);
  SNODEP_FIELD(train, frequency);
  SNODEP_FIELD(train, context_len);
  SNODEP_FIELD(train, target_len);
  SNODEP_FIELD(eval, frequency);
  SNODEP_FIELD(eval, num_contexts);
  SNODEP_FIELD(eval, test_fraction);
  SNODEP_FIELD(solver, method);
  SNODEP_FIELD(solver, steps_per_unit);
  SNODEP_FIELD(data, kind);
  SNODEP_FIELD(data, dim);
  SNODEP_FIELD(data, timesteps);
  SNODEP_FIELD(data, cells);
  SNODEP_FIELD(data, noise_sd);
  SNODEP_FIELD(data, normalize_window);
  SNODEP_FIELD(scfea, steps);
  SNODEP_FIELD(scfea, lr);
  SNODEP_FIELD(scfea, lambda_nt);
  SNODEP_FIELD(scfea, hidden);
  SNODEP_FIELD(knockout, k);
  SNODEP_FIELD(knockout, subsets);
  SNODEP_FIELD(knockout, test_fraction);
#undef SNODEP_FIELD
  return s;
}

// Semantic checks that do not depend on the data.
void check(const RunConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ValidationError("config: " + key + " " + why);
  };
  try {
    (void)parse_model_kind(c.model.kind);
  } catch (const ValidationError&) {
    fail("model.kind", "must be np, nodep, snodep or snodep_gruode (got '" + c.model.kind + "')");
  }
  if (!c.model.encoder.empty() && c.model.encoder != "mean" && c.model.encoder != "lstm" &&
      c.model.encoder != "gruode") {
    fail("model.encoder", "must be mean, lstm or gruode (got '" + c.model.encoder + "')");
  }
  if (c.model.head != "auto" && c.model.head != "poisson" && c.model.head != "gaussian") {
    fail("model.head", "must be auto, poisson or gaussian (got '" + c.model.head + "')");
  }
  if (c.model.latent != "normal" && c.model.latent != "lognormal") {
    fail("model.latent", "must be normal or lognormal (got '" + c.model.latent + "')");
  }
  if (c.model.r_dim == 0) fail("model.r_dim", "must be positive");
  if (c.model.z_dim == 0) fail("model.z_dim", "must be positive");
  if (c.model.d_dim == 0) fail("model.d_dim", "must be positive");
  if (c.model.hidden == 0) fail("model.hidden", "must be positive");
  if (c.train.steps == 0) fail("train.steps", "must be positive");
  if (c.train.batch_size == 0) fail("train.batch_size", "must be positive");
  if (!(c.train.lr >= 0.0)) fail("train.lr", "must be non-negative");
  if (!(c.train.kl_weight >= 0.0)) fail("train.kl_weight", "must be non-negative");
  if (c.train.frequency >= 0.0 && !(c.train.frequency > 0.0 && c.train.frequency <= 1.0)) {
    fail("train.frequency", "must lie in (0, 1]");
  }
  if (c.train.context_len < 2) fail("train.context_len", "must be >= 2");
  if (c.train.target_len <= c.train.context_len) fail("train.target_len", "must exceed train.context_len");
  if (!(c.eval.frequency > 0.0 && c.eval.frequency <= 1.0)) fail("eval.frequency", "must lie in (0, 1]");
  if (c.eval.num_contexts == 0) fail("eval.num_contexts", "must be positive");
  if (!(c.eval.test_fraction > 0.0 && c.eval.test_fraction < 1.0)) fail("eval.test_fraction", "must lie in (0, 1)");
  if (c.solver.method != "euler" && c.solver.method != "rk4") fail("solver.method", "must be euler or rk4");
  if (c.solver.steps_per_unit < 1) fail("solver.steps_per_unit", "must be >= 1");
  if (c.data.kind != "poisson" && c.data.kind != "gaussian") fail("data.kind", "must be poisson or gaussian");
  if (c.data.dim == 0) fail("data.dim", "must be positive");
  if (c.data.timesteps == 0) fail("data.timesteps", "must be positive");
  if (c.data.cells == 0) fail("data.cells", "must be positive");
  if (!(c.data.noise_sd >= 0.0)) fail("data.noise_sd", "must be non-negative");
  if (!(c.scfea.lr >= 0.0)) fail("scfea.lr", "must be non-negative");
  if (!(c.scfea.lambda_nt >= 0.0)) fail("scfea.lambda_nt", "must be non-negative");
  if (c.scfea.hidden == 0) fail("scfea.hidden", "must be positive");
  if (c.knockout.k == 0) fail("knockout.k", "must be positive");
  if (c.knockout.subsets < 2) fail("knockout.subsets", "must be >= 2");
  if (!(c.knockout.test_fraction > 0.0 && c.knockout.test_fraction < 1.0)) {
    fail("knockout.test_fraction", "must lie in (0, 1)");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  RunConfig cfg;
  auto table = sections(cfg);
  for (const auto& [sec, body] : doc.items()) {
    auto it = table.find(sec);
    if (it == table.end()) throw ValidationError("config: unknown section '" + sec + "'");
    if (!body.is_object()) throw ValidationError("config: section '" + sec + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      auto f = it->second.find(key);
      if (f == it->second.end()) throw ValidationError("config: unknown key '" + sec + "." + key + "'");
      f->second.read(value);
    }
  }
  check(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_json(const RunConfig& cfg) {
  RunConfig copy = cfg;
  json doc = json::object();
  for (const auto& [sec, fields] : sections(copy)) {
    for (const auto& [key, f] : fields) doc[sec][key] = f.write();
  }
  return doc.dump(2);
}

SolverConfig solver_config(const RunConfig& cfg) {
  return {parse_solver_method(cfg.solver.method), cfg.solver.steps_per_unit};
}

ModelConfig model_config(const RunConfig& cfg, const TimeSeriesDataset& data, std::uint64_t seed) {
  ModelConfig m;
  m.kind = cfg.model.encoder.empty() ? parse_model_kind(cfg.model.kind)
                                     : model_for_encoder(parse_encoder_kind(cfg.model.encoder));
  if (cfg.model.head == "auto") {
    m.head = data.kind == DataKind::expression ? HeadKind::poisson : HeadKind::gaussian;
  } else {
    m.head = parse_head_kind(cfg.model.head);
  }
  m.latent = parse_latent_family(cfg.model.latent);
  m.y_dim = data.dim();
  m.r_dim = cfg.model.r_dim;
  m.z_dim = cfg.model.z_dim;
  m.d_dim = cfg.model.d_dim;
  m.hidden = cfg.model.hidden;
  m.encoder_time_input = cfg.model.encoder_time_input;
  m.solver = solver_config(cfg);
  m.seed = derive_seed(seed, 0);
  return m;
}

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.steps = cfg.train.steps;
  t.batch_size = cfg.train.batch_size;
  t.lr = cfg.train.lr;
  t.kl_weight = cfg.train.kl_weight;
  t.frequency = cfg.train.frequency < 0.0 ? cfg.eval.frequency : cfg.train.frequency;
  t.context_len = cfg.train.context_len;
  t.target_len = cfg.train.target_len;
  t.seed = derive_seed(seed, 1);
  return t;
}

EvalConfig eval_config(const RunConfig& cfg, std::uint64_t seed) {
  EvalConfig e;
  e.context_len = cfg.train.context_len;
  e.target_len = cfg.train.target_len;
  e.num_contexts = cfg.eval.num_contexts;
  e.frequency = cfg.eval.frequency;
  e.seed = derive_seed(seed, 2);
  return e;
}

SyntheticSpec synthetic_spec(const RunConfig& cfg, std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = parse_head_kind(cfg.data.kind);
  s.y_dim = cfg.data.dim;
  s.timesteps = cfg.data.timesteps;
  s.cells_per_t = cfg.data.cells;
  s.noise_sd = cfg.data.noise_sd;
  s.seed = seed;
  return s;
}

ScfeaConfig scfea_config(const RunConfig& cfg, std::uint64_t seed) {
  return {cfg.scfea.steps, cfg.scfea.lr, cfg.scfea.lambda_nt, cfg.scfea.hidden, derive_seed(seed, 3)};
}

KnockoutConfig knockout_config(const RunConfig& cfg, std::uint64_t seed) {
  KnockoutConfig k;
  k.k = cfg.knockout.k;
  k.subsets = cfg.knockout.subsets;
  k.test_fraction = cfg.knockout.test_fraction;
  k.seed = derive_seed(seed, 4);
  return k;
}

}  // namespace snodep
