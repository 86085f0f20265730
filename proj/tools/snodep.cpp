// snodep command-line tool.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
// failure (solver blow-up, diverged training), 1 anything else.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "snodep/config.hpp"
#include "snodep/error.hpp"
#include "snodep/evaluation.hpp"
#include "snodep/knockout.hpp"
#include "snodep/parallel.hpp"
#include "snodep/scfea.hpp"
#include "snodep/synthetic.hpp"
#include "snodep/training.hpp"

namespace fs = std::filesystem;
using namespace snodep;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out = ".";
  bool quiet = false;
};

Globals g;

void note(const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

RunConfig run_config() {
  return g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
}

fs::path out_dir() {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("cannot create output directory " + dir.string());
  return dir;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + p.string());
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  auto out = open_out(p);
  out << text << '\n';
}

// --- model description next to checkpoints --------------------------------

std::string model_json(const ModelConfig& m) {
  nlohmann::json j;
  j["kind"] = to_string(m.kind);
  j["head"] = to_string(m.head);
  j["latent"] = to_string(m.latent);
  j["y_dim"] = m.y_dim;
  j["r_dim"] = m.r_dim;
  j["z_dim"] = m.z_dim;
  j["d_dim"] = m.d_dim;
  j["hidden"] = m.hidden;
  j["encoder_time_input"] = m.encoder_time_input;
  j["solver"] = {{"method", to_string(m.solver.method)}, {"steps_per_unit", m.solver.steps_per_unit}};
  j["seed"] = m.seed;
  return j.dump(2);
}

ModelConfig read_model_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    ModelConfig m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.head = parse_head_kind(j.at("head").get<std::string>());
    m.latent = parse_latent_family(j.at("latent").get<std::string>());
    m.y_dim = j.at("y_dim").get<std::size_t>();
    m.r_dim = j.at("r_dim").get<std::size_t>();
    m.z_dim = j.at("z_dim").get<std::size_t>();
    m.d_dim = j.at("d_dim").get<std::size_t>();
    m.hidden = j.at("hidden").get<std::size_t>();
    m.encoder_time_input = j.at("encoder_time_input").get<bool>();
    m.solver.method = parse_solver_method(j.at("solver").at("method").get<std::string>());
    m.solver.steps_per_unit = j.at("solver").at("steps_per_unit").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

// --- CSV writers ------------------------------------------------------------

void write_metrics(const MetricReport& r, const std::vector<std::string>& dims, const fs::path& p) {
  auto out = open_out(p);
  out << "timestep,time,mse,unseen";
  for (const auto& d : dims) out << ',' << d;
  out << '\n';
  for (std::size_t i = 0; i < r.mse.size(); ++i) {
    out << i << ',' << fmt(r.times[i]) << ',' << fmt(r.mse[i]) << ',' << (i >= r.unseen_from ? 1 : 0);
    for (double v : r.per_dim[i]) out << ',' << fmt(v);
    out << '\n';
  }
}

void write_summary(const fs::path& p, const std::vector<std::pair<std::string, double>>& rows) {
  auto out = open_out(p);
  out << "metric,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << fmt(v) << '\n';
}

void write_losses(const std::vector<double>& losses, const fs::path& p) {
  auto out = open_out(p);
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i << ',' << fmt(losses[i]) << '\n';
}

std::vector<std::string> scored_features(const TimeSeriesDataset& ds) {
  return {ds.features.begin(), ds.features.end() - static_cast<std::ptrdiff_t>(ds.knockout_dims)};
}

// Train/test pair: explicit test file or a per-timestep split of the data.
std::pair<TimeSeriesDataset, TimeSeriesDataset> load_split(const std::string& data, const std::string& test,
                                                           const RunConfig& cfg) {
  TimeSeriesDataset train_ds = read_dataset_csv(data);
  if (!test.empty()) {
    TimeSeriesDataset test_ds = read_dataset_csv(test);
    if (test_ds.features != train_ds.features) throw ValidationError("test data features differ from training data");
    return {std::move(train_ds), std::move(test_ds)};
  }
  return split_samples(train_ds, cfg.eval.test_fraction, derive_seed(g.seed, 5));
}

struct TrainOutcome {
  MetricReport report;
  double untrained_unseen = 0.0;
  double baseline_unseen = 0.0;
};

TrainOutcome train_and_score(const RunConfig& cfg, const TimeSeriesDataset& train_ds,
                             const TimeSeriesDataset& test_ds, std::uint64_t seed, ProcessModel& model,
                             std::vector<double>* losses, const std::string& label) {
  TrainConfig tc = train_config(cfg, seed);
  EvalConfig ec = eval_config(cfg, seed);
  TrainOutcome out;
  out.untrained_unseen = evaluate(model, test_ds, ec).unseen_mse;
  const std::size_t every = std::max<std::size_t>(1, tc.steps / 10);
  tc.on_step = [&](std::size_t step, double loss) {
    if ((step + 1) % every == 0) note(label + "step " + std::to_string(step + 1) + "/" + std::to_string(tc.steps) + " loss " + fmt(loss));
  };
  TrainResult tr = train(model, train_ds, tc);
  if (losses) *losses = std::move(tr.losses);
  out.report = evaluate(model, test_ds, ec);
  out.baseline_unseen =
      evaluate_constant_mean(model.config().head, train_ds, test_ds, tc.target_len, ec.target_len).unseen_mse;
  return out;
}

// --- commands ---------------------------------------------------------------

struct GenerateArgs {
  std::string kind;
  std::size_t cells = 0, timesteps = 0, dim = 0;
};

void cmd_generate(const GenerateArgs& a) {
  RunConfig cfg = run_config();
  if (!a.kind.empty()) cfg.data.kind = a.kind;
  if (a.cells) cfg.data.cells = a.cells;
  if (a.timesteps) cfg.data.timesteps = a.timesteps;
  if (a.dim) cfg.data.dim = a.dim;
  cfg = parse_run_config(run_config_json(cfg));
  const SyntheticSpec spec = synthetic_spec(cfg, g.seed);
  const SyntheticData data = generate_synthetic(spec);
  const fs::path dir = out_dir();
  write_dataset_csv(data.data, dir / "data.csv");
  write_truth_csv(data, dir / "truth.csv");
  nlohmann::json echo = {{"kind", cfg.data.kind},       {"dim", spec.y_dim},
                         {"timesteps", spec.timesteps}, {"cells", spec.cells_per_t},
                         {"noise_sd", spec.noise_sd},   {"seed", spec.seed}};
  write_text(dir / "spec.json", echo.dump(2));
  note("wrote " + (dir / "data.csv").string());
}

struct PreprocessArgs {
  std::string data, matrix, days;
  std::size_t window = 0;
};

void cmd_preprocess(const PreprocessArgs& a) {
  RunConfig cfg = run_config();
  TimeSeriesDataset ds;
  if (!a.matrix.empty()) {
    if (a.days.empty()) throw ValidationError("--matrix needs --days");
    ds = load_expression_matrix(a.matrix, a.days);
  } else if (!a.data.empty()) {
    ds = load_expression_csv(a.data);
  } else {
    throw ValidationError("preprocess needs --data or --matrix/--days");
  }
  const std::size_t window = a.window ? a.window : cfg.data.normalize_window;
  const TimeSeriesDataset out = log_normalize_scale(ds, window);
  const fs::path dir = out_dir();
  write_dataset_csv(ds, dir / "counts.csv");
  write_dataset_csv(out, dir / "normalized.csv");
  note("wrote " + (dir / "normalized.csv").string());
}

void write_flux_outputs(const FluxEstimate& est, const fs::path& dir) {
  write_dataset_csv(est.flux, dir / "flux.csv");
  write_dataset_csv(est.balance, dir / "balance.csv");
  auto out = open_out(dir / "flux_loss.csv");
  out << "timestep,time,initial_loss,final_loss\n";
  for (std::size_t t = 0; t < est.final_loss.size(); ++t) {
    out << t << ',' << fmt(est.flux.times[t]) << ',' << fmt(est.initial_loss[t]) << ','
        << fmt(est.final_loss[t]) << '\n';
  }
}

struct FluxArgs {
  std::string data, pathway;
};

void cmd_estimate_flux(const FluxArgs& a) {
  const RunConfig cfg = run_config();
  const TimeSeriesDataset ds = load_expression_csv(a.data);
  const PathwayDef pathway = load_pathway(a.pathway);
  const FluxEstimate est = estimate_flux_balance(ds, pathway, scfea_config(cfg, g.seed));
  const fs::path dir = out_dir();
  write_flux_outputs(est, dir);
  note("wrote " + (dir / "flux.csv").string());
}

struct KnockoutArgs {
  std::string data, pathway;
  std::size_t k = 0, subsets = 0;
};

void cmd_knockout(const KnockoutArgs& a) {
  RunConfig cfg = run_config();
  if (a.k) cfg.knockout.k = a.k;
  if (a.subsets) cfg.knockout.subsets = a.subsets;
  cfg = parse_run_config(run_config_json(cfg));
  const TimeSeriesDataset ds = load_expression_csv(a.data);
  const PathwayDef pathway = load_pathway(a.pathway);
  const KnockoutDataset ko =
      knockout_generate(ds, pathway, knockout_config(cfg, g.seed), scfea_estimator(scfea_config(cfg, g.seed)));
  const fs::path dir = out_dir();
  auto table = open_out(dir / "configurations.csv");
  table << "configuration,split,knocked_genes\n";
  for (std::size_t s = 0; s < ko.configurations.size(); ++s) {
    const auto& c = ko.configurations[s];
    const fs::path sub = dir / ("config_" + std::to_string(s));
    fs::create_directories(sub);
    write_dataset_csv(c.flux, sub / "flux.csv");
    write_dataset_csv(c.balance, sub / "balance.csv");
    std::string names;
    for (std::size_t gi : c.knocked) names += (names.empty() ? "" : ";") + ko.genes[gi];
    write_text(sub / "knocked.txt", names);
    table << s << ',' << (c.test ? "test" : "train") << ',' << names << '\n';
  }
  write_dataset_csv(pool_configurations(ko, ko.train_indices(), false), dir / "flux_train.csv");
  write_dataset_csv(pool_configurations(ko, ko.test_indices(), false), dir / "flux_test.csv");
  write_dataset_csv(pool_configurations(ko, ko.train_indices(), true), dir / "balance_train.csv");
  write_dataset_csv(pool_configurations(ko, ko.test_indices(), true), dir / "balance_test.csv");
  note("wrote " + std::to_string(ko.configurations.size()) + " configurations to " + dir.string());
}

struct TrainArgs {
  std::string data, test;
};

void cmd_train(const TrainArgs& a) {
  const RunConfig cfg = run_config();
  auto [train_ds, test_ds] = load_split(a.data, a.test, cfg);
  const ModelConfig mc = model_config(cfg, train_ds, g.seed);
  ProcessModel model(mc);
  std::vector<double> losses;
  const TrainOutcome res = train_and_score(cfg, train_ds, test_ds, g.seed, model, &losses, "");
  const fs::path dir = out_dir();
  save_checkpoint(model.parameters(), dir / "checkpoint.txt");
  write_text(dir / "model.json", model_json(mc));
  write_text(dir / "config.json", run_config_json(cfg));
  write_losses(losses, dir / "loss.csv");
  write_metrics(res.report, scored_features(test_ds), dir / "metrics.csv");
  write_summary(dir / "summary.csv", {{"unseen_mse", res.report.unseen_mse},
                                      {"all_mse", res.report.all_mse},
                                      {"untrained_unseen_mse", res.untrained_unseen},
                                      {"constant_mean_unseen_mse", res.baseline_unseen},
                                      {"final_loss", losses.back()}});
  std::cout << "unseen test-MSE " << fmt(res.report.unseen_mse) << '\n';
}

struct EvaluateArgs {
  std::string model_dir, data;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const fs::path mdir(a.model_dir);
  const ModelConfig mc = read_model_json(mdir / "model.json");
  const RunConfig cfg = g.config_path.empty() && fs::exists(mdir / "config.json")
                            ? load_run_config(mdir / "config.json")
                            : run_config();
  ProcessModel model(mc);
  load_checkpoint(model.parameters(), mdir / "checkpoint.txt");
  const TimeSeriesDataset test = read_dataset_csv(a.data);
  const MetricReport r = evaluate(model, test, eval_config(cfg, g.seed));
  const fs::path dir = out_dir();
  write_metrics(r, scored_features(test), dir / "metrics.csv");
  write_summary(dir / "summary.csv", {{"unseen_mse", r.unseen_mse}, {"all_mse", r.all_mse}});
  std::cout << "unseen test-MSE " << fmt(r.unseen_mse) << '\n';
}

struct CompareArgs {
  std::vector<std::string> models;
  std::string data, test;
  std::size_t seeds = 1;
};

void cmd_compare(const CompareArgs& a) {
  const RunConfig base = run_config();
  if (a.models.empty()) throw ValidationError("--models needs at least one model kind");
  if (a.seeds == 0) throw ValidationError("--seeds must be positive");
  std::vector<ModelKind> kinds;
  for (const auto& m : a.models) kinds.push_back(parse_model_kind(m));
  auto [train_ds, test_ds] = load_split(a.data, a.test, base);
  const std::size_t cells = kinds.size() * a.seeds;
  std::vector<double> mse(cells);
  parallel_for(cells, [&](std::size_t i) {
    const std::size_t k = i / a.seeds, s = i % a.seeds;
    RunConfig cfg = base;
    cfg.model.kind = a.models[k];
    cfg.model.encoder.clear();
    const std::uint64_t seed = g.seed + s;
    ProcessModel model(model_config(cfg, train_ds, seed));
    const std::string label = "[" + a.models[k] + " seed " + std::to_string(seed) + "] ";
    mse[i] = train_and_score(cfg, train_ds, test_ds, seed, model, nullptr, label).report.unseen_mse;
  });
  auto col = [&](ModelKind kind) -> long {
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      if (kinds[k] == kind) return static_cast<long>(k);
    }
    return -1;
  };
  const long nodep = col(ModelKind::nodep), snodep = col(ModelKind::snodep);
  const bool diff = nodep >= 0 && snodep >= 0;
  const fs::path dir = out_dir();
  auto out = open_out(dir / "compare.csv");
  out << "seed";
  for (const auto& m : a.models) out << ',' << m;
  if (diff) out << ",nodep_minus_snodep";
  out << '\n';
  std::vector<double> mean(kinds.size(), 0.0);
  for (std::size_t s = 0; s < a.seeds; ++s) {
    out << g.seed + s;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      out << ',' << fmt(mse[k * a.seeds + s]);
      mean[k] += mse[k * a.seeds + s] / static_cast<double>(a.seeds);
    }
    if (diff) out << ',' << fmt(mse[nodep * a.seeds + s] - mse[snodep * a.seeds + s]);
    out << '\n';
  }
  auto sum = open_out(dir / "summary.csv");
  sum << "model,mean_test_mse\n";
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    sum << a.models[k] << ',' << fmt(mean[k]) << '\n';
    std::cout << a.models[k] << " mean unseen test-MSE " << fmt(mean[k]) << '\n';
  }
  if (diff) sum << "nodep_minus_snodep," << fmt(mean[nodep] - mean[snodep]) << '\n';
}

struct SweepArgs {
  std::string data, test;
  std::vector<std::size_t> contexts{2, 4, 6, 8};
};

void cmd_sweep(const SweepArgs& a) {
  const RunConfig cfg = run_config();
  auto [train_ds, test_ds] = load_split(a.data, a.test, cfg);
  const auto rows = context_sweep(train_ds, test_ds, a.contexts, model_config(cfg, train_ds, g.seed),
                                  train_config(cfg, g.seed), eval_config(cfg, g.seed));
  const fs::path dir = out_dir();
  auto out = open_out(dir / "sweep.csv");
  out << "context_len,target_len,test_mse,test_mse_common\n";
  for (const auto& r : rows) {
    out << r.context_len << ',' << r.target_len << ',' << fmt(r.unseen_mse) << ',' << fmt(r.common_mse) << '\n';
    std::cout << "C=" << r.context_len << " test-MSE " << fmt(r.unseen_mse) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured neural ODE processes for time-varying distributions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Synthetic dataset with known dynamics");
  generate->add_option("--kind", gen.kind, "poisson or gaussian");
  generate->add_option("--cells", gen.cells, "Samples per timestep");
  generate->add_option("--timesteps", gen.timesteps, "Number of timesteps");
  generate->add_option("--dim", gen.dim, "Feature count");

  PreprocessArgs pre;
  auto* preprocess = app.add_subcommand("preprocess", "log1p + standardization of expression counts");
  preprocess->add_option("--data", pre.data, "Triplet or long-format counts CSV");
  preprocess->add_option("--matrix", pre.matrix, "gene x cell count matrix");
  preprocess->add_option("--days", pre.days, "cell_id,day sidecar for --matrix");
  preprocess->add_option("--window", pre.window, "Timesteps used for the statistics (0 = all)");

  FluxArgs flux;
  auto* estimate = app.add_subcommand("estimate-flux", "Per-timestep flux and balance estimation");
  estimate->add_option("--data", flux.data, "Expression CSV")->required();
  estimate->add_option("--pathway", flux.pathway, "Pathway JSON")->required();

  KnockoutArgs ko;
  auto* knockout = app.add_subcommand("knockout", "Gene-knockout flux/balance datasets");
  knockout->add_option("--data", ko.data, "Expression CSV")->required();
  knockout->add_option("--pathway", ko.pathway, "Pathway JSON")->required();
  knockout->add_option("--k", ko.k, "Number of top expressed genes");
  knockout->add_option("--subsets", ko.subsets, "Number of knockout configurations");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and score it on unseen timesteps");
  train_cmd->add_option("--data", tr.data, "Training dataset CSV")->required();
  train_cmd->add_option("--test-data", tr.test, "Held-out dataset CSV (default: split --data)");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a trained model");
  evaluate_cmd->add_option("--model", ev.model_dir, "Directory written by train")->required();
  evaluate_cmd->add_option("--data", ev.data, "Test dataset CSV")->required();

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Test-MSE of several model kinds over seeds");
  compare->add_option("--models", cmp.models, "Comma separated model kinds")->delimiter(',')->required();
  compare->add_option("--data", cmp.data, "Training dataset CSV")->required();
  compare->add_option("--test-data", cmp.test, "Held-out dataset CSV");
  compare->add_option("--seeds", cmp.seeds, "Number of seeds");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep-context", "Test-MSE versus context length");
  sweep->add_option("--data", sw.data, "Training dataset CSV")->required();
  sweep->add_option("--test-data", sw.test, "Held-out dataset CSV");
  sweep->add_option("--contexts", sw.contexts, "Comma separated context lengths")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) cmd_generate(gen);
    else if (*preprocess) cmd_preprocess(pre);
    else if (*estimate) cmd_estimate_flux(flux);
    else if (*knockout) cmd_knockout(ko);
    else if (*train_cmd) cmd_train(tr);
    else if (*evaluate_cmd) cmd_evaluate(ev);
    else if (*compare) cmd_compare(cmp);
    else if (*sweep) cmd_sweep(sw);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
