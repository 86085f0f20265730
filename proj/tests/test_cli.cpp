#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "snodep/dataset.hpp"
#include "snodep/pathway.hpp"

#ifdef SNODEP_CLI_PATH

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SNODEP_CLI_PATH) + " --quiet " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "snodep_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kFastConfig =
    R"({"train": {"steps": 3, "batch_size": 4}, "eval": {"num_contexts": 2},
        "solver": {"steps_per_unit": 1},
        "model": {"r_dim": 4, "z_dim": 2, "d_dim": 2, "hidden": 4},
        "scfea": {"steps": 5}})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("train") == 2);
  }

  TEST_CASE("generate is deterministic and loadable") {
    const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
    REQUIRE(run("--seed 4 --out " + a.string() + " generate --cells 6") == 0);
    REQUIRE(run("--seed 4 --out " + b.string() + " generate --cells 6") == 0);
    CHECK(slurp(a / "data.csv") == slurp(b / "data.csv"));
    CHECK(slurp(a / "truth.csv") == slurp(b / "truth.csv"));
    const auto ds = snodep::read_dataset_csv(a / "data.csv");
    CHECK(ds.num_timesteps() == 16);
    CHECK(ds.steps[0].count() == 6);
    // Round trip through the library writer gives the same bytes.
    snodep::write_dataset_csv(ds, a / "again.csv");
    CHECK(slurp(a / "again.csv") == slurp(a / "data.csv"));
  }

  TEST_CASE("train, evaluate and seeded reproducibility") {
    const fs::path dir = fresh_dir("train");
    write_text(dir / "fast.json", kFastConfig);
    REQUIRE(run("--seed 1 --out " + dir.string() + " generate --cells 10") == 0);
    const std::string common = "--seed 2 --config " + (dir / "fast.json").string();
    REQUIRE(run(common + " --out " + (dir / "r1").string() + " train --data " + (dir / "data.csv").string()) == 0);
    REQUIRE(run(common + " --out " + (dir / "r2").string() + " train --data " + (dir / "data.csv").string()) == 0);
    CHECK(fs::exists(dir / "r1" / "metrics.csv"));
    CHECK(fs::exists(dir / "r1" / "checkpoint.txt"));
    CHECK(slurp(dir / "r1" / "metrics.csv") == slurp(dir / "r2" / "metrics.csv"));
    CHECK(slurp(dir / "r1" / "loss.csv") == slurp(dir / "r2" / "loss.csv"));
    REQUIRE(run("--seed 2 --out " + (dir / "ev").string() + " evaluate --model " + (dir / "r1").string() +
                " --data " + (dir / "data.csv").string()) == 0);
    CHECK(fs::exists(dir / "ev" / "summary.csv"));
  }

  TEST_CASE("compare and sweep write their tables") {
    const fs::path dir = fresh_dir("compare");
    write_text(dir / "fast.json", kFastConfig);
    REQUIRE(run("--seed 1 --out " + dir.string() + " generate --cells 10 --kind gaussian") == 0);
    const std::string cfg = " --config " + (dir / "fast.json").string();
    REQUIRE(run(cfg + " --out " + (dir / "cmp").string() + " compare --models np,snodep --seeds 2 --data " +
                (dir / "data.csv").string()) == 0);
    const std::string table = slurp(dir / "cmp" / "compare.csv");
    CHECK(table.rfind("seed,np,snodep", 0) == 0);
    REQUIRE(run(cfg + " --out " + (dir / "sw").string() + " sweep-context --contexts 2,4 --data " +
                (dir / "data.csv").string()) == 0);
    CHECK(slurp(dir / "sw" / "sweep.csv").find("context_len") == 0);
  }

  TEST_CASE("flux and knockout pipeline") {
    const fs::path dir = fresh_dir("flux");
    write_text(dir / "fast.json", kFastConfig);
    const snodep::PathwayDef p = snodep::chain_pathway(3, 2);
    write_text(dir / "pathway.json", snodep::pathway_to_json(p));
    std::string csv = "gene,day,cell_id,count\n";
    for (int day = 0; day < 2; ++day) {
      for (int c = 0; c < 4; ++c) {
        for (std::size_t g = 0; g < p.genes.size(); ++g) {
          csv += p.genes[g] + "," + std::to_string(day) + ",d" + std::to_string(day) + "c" + std::to_string(c) +
                 "," + std::to_string((g * 3 + c + day) % 7) + "\n";
        }
      }
    }
    write_text(dir / "counts.csv", csv);
    const std::string cfg = " --config " + (dir / "fast.json").string();
    REQUIRE(run(cfg + " --out " + (dir / "f").string() + " estimate-flux --data " + (dir / "counts.csv").string() +
                " --pathway " + (dir / "pathway.json").string()) == 0);
    CHECK(snodep::read_dataset_csv(dir / "f" / "flux.csv").dim() == 3);
    CHECK(snodep::read_dataset_csv(dir / "f" / "balance.csv").dim() == 2);
    REQUIRE(run(cfg + " --out " + (dir / "k").string() + " knockout --k 4 --subsets 3 --data " +
                (dir / "counts.csv").string() + " --pathway " + (dir / "pathway.json").string()) == 0);
    const auto train = snodep::read_dataset_csv(dir / "k" / "flux_train.csv");
    CHECK(train.dim() == 3 + 6);
    CHECK(train.knockout_dims == 6);
    REQUIRE(run(cfg + " --out " + (dir / "p").string() + " preprocess --data " + (dir / "counts.csv").string()) == 0);
    CHECK(snodep::read_dataset_csv(dir / "p" / "normalized.csv").kind == snodep::DataKind::normalized);
  }

  TEST_CASE("bad inputs exit with code 2") {
    const fs::path dir = fresh_dir("bad");
    write_text(dir / "unknown.json", R"({"train": {"epochz": 3}})");
    REQUIRE(run("--out " + dir.string() + " generate --cells 4") == 0);
    CHECK(run("--config " + (dir / "unknown.json").string() + " --out " + (dir / "x").string() +
              " train --data " + (dir / "data.csv").string()) == 2);
    CHECK(run("--out " + (dir / "y").string() + " train --data " + (dir / "missing.csv").string()) == 2);
    write_text(dir / "broken.csv", "time,sample_id,a\n0,c1,oops\n");
    CHECK(run("--out " + (dir / "z").string() + " train --data " + (dir / "broken.csv").string()) == 2);
  }
}

#endif
