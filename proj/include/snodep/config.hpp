#pragma once

// Run configuration shared by the CLI commands. JSON with the sections
// model, train, eval, solver, data, scfea and knockout; every key is optional
// and unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>

#include "snodep/dataset.hpp"
#include "snodep/evaluation.hpp"
#include "snodep/knockout.hpp"
#include "snodep/process_model.hpp"
#include "snodep/synthetic.hpp"
#include "snodep/training.hpp"

namespace snodep {

struct RunConfig {
  struct Model {
    std::string kind = "snodep";  // np | nodep | snodep | snodep_gruode
    std::string encoder;          // mean | lstm | gruode; overrides kind when set
    std::string head = "auto";    // poisson | gaussian | auto (poisson for counts)
    std::string latent = "normal";
    std::size_t r_dim = 64;
    std::size_t z_dim = 32;
    std::size_t d_dim = 32;
    std::size_t hidden = 64;
    bool encoder_time_input = false;
  } model;
  struct Train {
    std::size_t steps = 5000;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    double kl_weight = 1.0;
    double frequency = -1.0;  // negative: use eval.frequency
    std::size_t context_len = 8;
    std::size_t target_len = 13;
  } train;
  struct Eval {
    double frequency = 1.0;
    std::size_t num_contexts = 256;
    double test_fraction = 0.2;
  } eval;
  struct Solver {
    std::string method = "rk4";
    int steps_per_unit = 10;
  } solver;
  struct Data {
    std::string kind = "poisson";  // synthetic generation
    std::size_t dim = 4;
    std::size_t timesteps = 16;
    std::size_t cells = 200;
    double noise_sd = 0.1;
    std::size_t normalize_window = 0;
  } data;
  struct Scfea {
    std::size_t steps = 1000;
    double lr = 1e-2;
    double lambda_nt = 0.1;
    std::size_t hidden = 16;
  } scfea;
  struct Knockout {
    std::size_t k = 20;
    std::size_t subsets = 5;
    double test_fraction = 0.2;
  } knockout;
};

/// Throws ValidationError naming the offending key.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& cfg);

/// Resolved settings for a dataset of the given kind and width.
ModelConfig model_config(const RunConfig& cfg, const TimeSeriesDataset& data, std::uint64_t seed);
TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed);
EvalConfig eval_config(const RunConfig& cfg, std::uint64_t seed);
SolverConfig solver_config(const RunConfig& cfg);
SyntheticSpec synthetic_spec(const RunConfig& cfg, std::uint64_t seed);
ScfeaConfig scfea_config(const RunConfig& cfg, std::uint64_t seed);
KnockoutConfig knockout_config(const RunConfig& cfg, std::uint64_t seed);

}  // namespace snodep
