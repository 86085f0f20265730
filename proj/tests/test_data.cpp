#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "snodep/config.hpp"
#include "snodep/dataset.hpp"
#include "snodep/error.hpp"
#include "snodep/knockout.hpp"
#include "snodep/pathway.hpp"
#include "snodep/synthetic.hpp"

using namespace snodep;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "snodep_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

TimeSeriesDataset tiny_expression() {
  TimeSeriesDataset ds;
  ds.kind = DataKind::expression;
  ds.features = {"a", "b"};
  ds.times = {0.0, 1.0};
  ds.steps.resize(2);
  for (auto& s : ds.steps) s.dim = 2;
  ds.steps[0].append(std::vector<double>{1, 0}, "x");
  ds.steps[0].append(std::vector<double>{3, 2}, "y");
  ds.steps[1].append(std::vector<double>{0, 5}, "z");
  return ds;
}

// Exact zero-dependence-free estimator stub: flux = module activity,
// balance from the stoichiometry, enough to exercise the pipeline quickly.
FluxEstimate stub_estimator(const TimeSeriesDataset& ds, const PathwayDef& pathway) {
  const FactorGraph g = build_factor_graph(pathway);
  FluxEstimate e;
  e.flux.kind = DataKind::flux;
  e.balance.kind = DataKind::balance;
  e.flux.times = e.balance.times = ds.times;
  for (const auto& m : pathway.modules) e.flux.features.push_back(m.name);
  for (const auto& m : pathway.metabolites) e.balance.features.push_back(m.name);
  const TimeSeriesDataset sub = select_features(ds, pathway.genes);
  for (const auto& s : sub.steps) {
    SampleMatrix f{g.num_modules(), {}, {}}, b{g.num_metabolites(), {}, {}};
    for (std::size_t j = 0; j < s.count(); ++j) {
      std::vector<double> flux(g.num_modules(), 0.0), bal(g.num_metabolites(), 0.0);
      for (std::size_t m = 0; m < g.num_modules(); ++m) {
        for (std::size_t gi : g.module_genes[m]) flux[m] += s.at(gi, j);
        flux[m] /= static_cast<double>(g.module_genes[m].size());
      }
      for (std::size_t k = 0; k < g.num_metabolites(); ++k) {
        for (std::size_t m : g.producers[k]) bal[k] += flux[m];
        for (std::size_t m : g.consumers[k]) bal[k] -= flux[m];
      }
      f.append(flux, s.ids[j]);
      b.append(bal, s.ids[j]);
    }
    e.flux.steps.push_back(std::move(f));
    e.balance.steps.push_back(std::move(b));
  }
  return e;
}

// 30 genes over 6 modules with all-distinct totals.
std::pair<TimeSeriesDataset, PathwayDef> toy_pathway_data(std::uint64_t seed) {
  const PathwayDef p = chain_pathway(6, 5);
  Rng rng(seed);
  std::poisson_distribution<int> pois(4.0);
  TimeSeriesDataset ds;
  ds.kind = DataKind::expression;
  ds.features = p.genes;
  ds.features.push_back("unrelated");
  for (int t = 0; t < 3; ++t) {
    ds.times.push_back(t);
    SampleMatrix s{ds.features.size(), {}, {}};
    for (int j = 0; j < 6; ++j) {
      std::vector<double> v(ds.features.size());
      for (std::size_t g = 0; g < v.size(); ++g) v[g] = pois(rng) + static_cast<double>(g % 7);
      s.append(v, "c" + std::to_string(t) + "_" + std::to_string(j));
    }
    ds.steps.push_back(std::move(s));
  }
  return {ds, p};
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("long-format round trip is exact") {
    TimeSeriesDataset ds = tiny_expression();
    ds.kind = DataKind::flux;
    ds.steps[0].data[0] = 0.1 + 0.2;
    ds.knockout_dims = 1;
    const auto path = scratch("roundtrip.csv");
    write_dataset_csv(ds, path);
    const TimeSeriesDataset back = read_dataset_csv(path);
    CHECK(back.kind == DataKind::flux);
    CHECK(back.knockout_dims == 1);
    CHECK(back.features == ds.features);
    CHECK(back.times == ds.times);
    for (std::size_t t = 0; t < 2; ++t) {
      CHECK(back.steps[t].data == ds.steps[t].data);
      CHECK(back.steps[t].ids == ds.steps[t].ids);
    }
  }

  TEST_CASE("triplet counts are grouped by day") {
    const auto path = scratch("triplet.csv");
    write_text(path,
               "gene,day,cell_id,count\n"
               "g1,0,c1,3\ng2,0,c1,1\ng1,0,c2,0\ng2,0,c2,4\n"
               "g1,2,c3,7\ng2,2,c3,2\n");
    const TimeSeriesDataset ds = load_expression_csv(path);
    CHECK(ds.num_timesteps() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.steps[0].count() == 2);
    CHECK(ds.steps[1].count() == 1);
    CHECK(ds.times == std::vector<double>{0.0, 2.0});
    CHECK(ds.steps[1].at(0, 0) == 7.0);
  }

  TEST_CASE("bad counts fail with the row number") {
    const auto path = scratch("bad.csv");
    write_text(path, "gene,day,cell_id,count\ng1,0,c1,3\ng1,0,c2,-1\n");
    try {
      load_expression_csv(path);
      FAIL("expected a failure");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    write_text(path, "gene,day,cell_id,count\ng1,0,c1,abc\n");
    CHECK_THROWS_AS(load_expression_csv(path), ValidationError);
  }

  TEST_CASE("matrix form with day sidecar") {
    const auto m = scratch("matrix.csv"), d = scratch("days.csv");
    write_text(m, "gene,c1,c2,c3\ng1,1,2,3\ng2,0,0,1\n");
    write_text(d, "cell_id,day\nc1,0\nc2,1\nc3,1\n");
    const TimeSeriesDataset ds = load_expression_matrix(m, d);
    CHECK(ds.num_timesteps() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.steps[0].count() == 1);
    CHECK(ds.steps[1].count() == 2);
    write_text(d, "cell_id,day\nc1,0\nc2,1\nc3,1\nc9,4\n");
    CHECK_THROWS_AS(load_expression_matrix(m, d), ValidationError);
  }

  TEST_CASE("log normalization examples") {
    TimeSeriesDataset ds;
    ds.kind = DataKind::expression;
    ds.features = {"zero", "g"};
    ds.times = {0.0};
    ds.steps.resize(1);
    ds.steps[0].dim = 2;
    ds.steps[0].append(std::vector<double>{0, 0}, "a");
    ds.steps[0].append(std::vector<double>{0, 3}, "b");
    const TimeSeriesDataset n = log_normalize_scale(ds);
    CHECK(n.kind == DataKind::normalized);
    CHECK(n.steps[0].at(0, 0) == 0.0);
    CHECK(n.steps[0].at(0, 1) == 0.0);
    // log1p -> [0, ln 4]; two values standardize to [-1, 1].
    CHECK(n.steps[0].at(1, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(n.steps[0].at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(log_normalize_scale(n), ValidationError);
  }

  TEST_CASE("normalized features have zero mean and unit std") {
    SyntheticSpec s;
    s.cells_per_t = 50;
    const auto data = generate_synthetic(s);
    const TimeSeriesDataset n = log_normalize_scale(data.data, 10);
    for (std::size_t f = 0; f < n.dim(); ++f) {
      double sum = 0, sq = 0, cnt = 0;
      for (std::size_t t = 0; t < 10; ++t) {
        for (std::size_t j = 0; j < n.steps[t].count(); ++j) {
          sum += n.steps[t].at(f, j);
          sq += n.steps[t].at(f, j) * n.steps[t].at(f, j);
          cnt += 1;
        }
      }
      CHECK(std::abs(sum / cnt) < 1e-10);
      CHECK(sq / cnt == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  TEST_CASE("validation rejects broken datasets") {
    TimeSeriesDataset ds = tiny_expression();
    CHECK_NOTHROW(ds.validate());
    ds.steps[0].data[1] = 0.5;
    CHECK_THROWS_AS(ds.validate(), ValidationError);
    ds = tiny_expression();
    ds.times = {1.0, 1.0};
    CHECK_THROWS_AS(ds.validate(), ValidationError);
    ds = tiny_expression();
    ds.steps[1] = SampleMatrix{2, {}, {}};
    CHECK_THROWS_AS(ds.validate(), ValidationError);
  }

  TEST_CASE("split keeps every timestep on both sides") {
    SyntheticSpec s;
    s.cells_per_t = 10;
    const auto data = generate_synthetic(s);
    const auto [train, test] = split_samples(data.data, 0.2, 4);
    for (std::size_t t = 0; t < data.data.num_timesteps(); ++t) {
      CHECK(test.steps[t].count() == 2);
      CHECK(train.steps[t].count() == 8);
      std::set<std::string> ids(train.steps[t].ids.begin(), train.steps[t].ids.end());
      for (const auto& id : test.steps[t].ids) CHECK(ids.count(id) == 0);
    }
    const auto again = split_samples(data.data, 0.2, 4);
    CHECK(again.second.steps[3].ids == test.steps[3].ids);
  }
}

TEST_SUITE("synthetic") {
  TEST_CASE("oscillator solves the damped linear system") {
    // d/dt z = A z with A = [[-0.1, 1], [-1, -0.1]], checked by central differences.
    for (double t : {0.0, 0.7, 3.2, 11.0}) {
      const auto z = oscillator_state(t);
      const auto zp = oscillator_state(t + 1e-6), zm = oscillator_state(t - 1e-6);
      const double d0 = (zp[0] - zm[0]) / 2e-6, d1 = (zp[1] - zm[1]) / 2e-6;
      CHECK(d0 == doctest::Approx(-0.1 * z[0] + z[1]).epsilon(1e-6));
      CHECK(d1 == doctest::Approx(-z[0] - 0.1 * z[1]).epsilon(1e-6));
    }
    CHECK(oscillator_state(0.0)[0] == 1.0);
    CHECK(oscillator_state(0.0)[1] == 0.0);
  }

  TEST_CASE("poisson counts follow the returned rates") {
    SyntheticSpec s;
    s.cells_per_t = 500;
    s.seed = 21;
    const auto data = generate_synthetic(s);
    CHECK_NOTHROW(data.data.validate());
    CHECK(data.data.kind == DataKind::expression);
    for (std::size_t t = 0; t < s.timesteps; ++t) {
      for (std::size_t f = 0; f < s.y_dim; ++f) {
        double m = 0;
        for (std::size_t j = 0; j < 500; ++j) {
          const double v = data.data.steps[t].at(f, j);
          CHECK(v >= 0.0);
          CHECK(v == std::floor(v));
          m += v;
        }
        m /= 500.0;
        const double lambda = data.mean[t][f];
        CHECK(std::abs(m - lambda) <= 4.0 * std::sqrt(lambda / 500.0));
      }
    }
  }

  TEST_CASE("gaussian values and determinism") {
    SyntheticSpec s;
    s.kind = HeadKind::gaussian;
    s.cells_per_t = 1;
    const auto a = generate_synthetic(s), b = generate_synthetic(s);
    CHECK_NOTHROW(a.data.validate());
    for (std::size_t t = 0; t < s.timesteps; ++t) {
      CHECK(a.data.steps[t].count() == 1);
      CHECK(a.data.steps[t].data == b.data.steps[t].data);
      for (double v : a.data.steps[t].data) CHECK(std::isfinite(v));
    }
    s.seed = 1;
    CHECK(generate_synthetic(s).data.steps[0].data != a.data.steps[0].data);
  }
}

TEST_SUITE("knockout") {
  TEST_CASE("top expressed matches a brute-force sort") {
    auto [ds, p] = toy_pathway_data(3);
    std::vector<std::pair<double, std::size_t>> totals;
    for (std::size_t g = 0; g < ds.dim(); ++g) {
      double sum = 0;
      for (const auto& s : ds.steps) {
        for (std::size_t j = 0; j < s.count(); ++j) sum += s.at(g, j);
      }
      totals.push_back({-sum, g});
    }
    std::sort(totals.begin(), totals.end());
    for (std::size_t k : {2u, 5u, 20u}) {
      const auto top = top_expressed(ds, k);
      REQUIRE(top.size() == k);
      for (std::size_t i = 0; i < k; ++i) CHECK(top[i] == totals[i].second);
    }
  }

  TEST_CASE("generated configurations follow the construction") {
    auto [ds, p] = toy_pathway_data(5);
    KnockoutConfig cfg;
    cfg.seed = 9;
    const KnockoutDataset ko = knockout_generate(ds, p, cfg, stub_estimator);
    REQUIRE(ko.configurations.size() == 5);
    CHECK(ko.genes == p.genes);
    CHECK(ko.train_indices().size() == 4);
    CHECK(ko.test_indices().size() == 1);
    const std::size_t d = p.genes.size(), u = p.modules.size(), v = p.metabolites.size();
    std::set<std::vector<std::size_t>> seen;
    for (const auto& c : ko.configurations) {
      CHECK(seen.insert(c.knocked).second);
      CHECK(!c.knocked.empty());
      CHECK(c.knocked.size() <= 10);
      for (std::size_t g : c.knocked) {
        CHECK(std::find(ko.top_genes.begin(), ko.top_genes.end(), g) != ko.top_genes.end());
      }
      for (std::size_t g = 0; g < d; ++g) {
        const bool knocked = std::binary_search(c.knocked.begin(), c.knocked.end(), g);
        CHECK(c.indicator[g] == (knocked ? 0.0 : 1.0));
      }
      CHECK(c.flux.dim() == u + d);
      CHECK(c.balance.dim() == v + d);
      CHECK(c.flux.knockout_dims == d);
      for (const auto& s : c.flux.steps) {
        for (std::size_t j = 0; j < s.count(); ++j) {
          for (std::size_t g = 0; g < d; ++g) CHECK(s.at(u + g, j) == c.indicator[g]);
          // A module whose genes are all knocked carries zero activity.
        }
      }
    }
  }

  TEST_CASE("knocked genes are zero in the estimator input") {
    auto [ds, p] = toy_pathway_data(6);
    std::vector<TimeSeriesDataset> inputs;
    FluxEstimator spy = [&](const TimeSeriesDataset& x, const PathwayDef& pw) {
      inputs.push_back(x);
      return stub_estimator(x, pw);
    };
    KnockoutConfig cfg;
    cfg.seed = 2;
    const KnockoutDataset ko = knockout_generate(ds, p, cfg, spy);
    REQUIRE(inputs.size() == 5);
    for (std::size_t s = 0; s < 5; ++s) {
      for (std::size_t g = 0; g < ko.genes.size(); ++g) {
        const bool knocked = ko.configurations[s].indicator[g] == 0.0;
        for (const auto& step : inputs[s].steps) {
          for (std::size_t j = 0; j < step.count(); ++j) {
            if (knocked) CHECK(step.at(g, j) == 0.0);
          }
        }
      }
    }
  }

  TEST_CASE("invalid settings fail") {
    auto [ds, p] = toy_pathway_data(7);
    KnockoutConfig cfg;
    cfg.subsets = 1;
    CHECK_THROWS_AS(knockout_generate(ds, p, cfg, stub_estimator), ValidationError);
    cfg.subsets = 5;
    cfg.k = 31;
    CHECK_THROWS_AS(knockout_generate(ds, p, cfg, stub_estimator), ValidationError);
    // k = 2 allows only two distinct single-gene subsets.
    cfg.k = 2;
    cfg.subsets = 3;
    CHECK_THROWS_AS(knockout_generate(ds, p, cfg, stub_estimator), ValidationError);
  }

  TEST_CASE("pooled configurations keep their groups") {
    auto [ds, p] = toy_pathway_data(8);
    const KnockoutDataset ko = knockout_generate(ds, p, KnockoutConfig{}, stub_estimator);
    const TimeSeriesDataset pooled = pool_configurations(ko, ko.train_indices(), false);
    CHECK(pooled.steps[0].count() == 4 * 6);
    CHECK(group_samples(pooled).keys.size() == 4);
    CHECK(pooled.steps[0].ids[0].rfind("s", 0) == 0);
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults and overrides") {
    const RunConfig def = parse_run_config("{}");
    CHECK(def.model.r_dim == 64);
    CHECK(def.train.steps == 5000);
    const RunConfig c = parse_run_config(R"({"model": {"kind": "np"}, "train": {"lr": 0.01}})");
    CHECK(c.model.kind == "np");
    CHECK(c.train.lr == 0.01);
    const RunConfig back = parse_run_config(run_config_json(c));
    CHECK(back.train.lr == 0.01);
    CHECK(back.model.kind == "np");
  }

  TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(parse_run_config(R"({"model": {"depth": 3}})"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"optim": {}})"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"steps": "many"}})"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("{not json"), ValidationError);
    try {
      parse_run_config(R"({"model": {"depth": 3}})");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("depth") != std::string::npos);
    }
  }

  TEST_CASE("resolved settings") {
    RunConfig c = parse_run_config(R"({"eval": {"frequency": 0.5}, "model": {"encoder": "gruode"}})");
    SyntheticSpec s;
    s.cells_per_t = 2;
    const auto data = generate_synthetic(s);
    const ModelConfig mc = model_config(c, data.data, 3);
    CHECK(mc.kind == ModelKind::snodep_gruode);
    CHECK(mc.head == HeadKind::poisson);
    CHECK(train_config(c, 3).frequency == 0.5);
    CHECK(eval_config(c, 3).frequency == 0.5);
  }
}
