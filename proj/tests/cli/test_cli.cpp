#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "misa/data/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory per test case.
struct Sandbox {
  fs::path root;
  Sandbox() {
    static int counter = 0;
    root = fs::temp_directory_path() /
           ("misa-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + root.string() + "' && '" MISA_CLI_PATH "' " + args +
                            " >> log.txt 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& rel) const {
    std::ifstream in(root / rel, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string log() const { return read("log.txt"); }

  // The single run directory whose name starts with `prefix`.
  fs::path run_dir(const std::string& under, const std::string& prefix) const {
    fs::path found;
    int n = 0;
    for (const auto& e : fs::directory_iterator(root / under)) {
      if (e.path().filename().string().rfind(prefix, 0) == 0) {
        found = e.path();
        ++n;
      }
    }
    REQUIRE(n == 1);
    return found;
  }
};

json load_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSmallTrain =
    "--steps 60 --hidden 8 --batch_size 16 --mc_samples 4 --hmc.chains 2 --eval_interval 0 "
    "--eval_episodes 2 --ood_states 50";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-data writes the requested count") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env line-reach --tier medium --n 20000 --seed 0 --out d.bin "
                  "--out_dir runs") == 0);
  const auto ds = misa::data::load_dataset(box.root / "d.bin");
  CHECK(ds.size() == 20000);
  CHECK(ds.provenance().at("tier") == "medium");
  const fs::path dir = box.run_dir("runs", "gen-data-0-");
  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "run_meta.json"));
}

TEST_CASE("gen-data is deterministic") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env chain-maze --tier medium_replay --n 3000 --seed 4 --out a.bin") == 0);
  REQUIRE(box.run("gen-data --env chain-maze --tier medium_replay --n 3000 --seed 4 --out b.bin") == 0);
  CHECK(box.read("a.bin") == box.read("b.bin"));
}

TEST_CASE("usage errors exit with 2") {
  Sandbox box;
  CHECK(box.run("gen-data --env line-reach --tier medium --n 100") == 2);
  CHECK(box.run("gen-data --env line-reach --tier legendary --n 100 --out x.bin") == 2);
  CHECK(box.run("gen-data --env nowhere --n 100 --out x.bin") == 2);
  CHECK(box.run("gen-data --n many --out x.bin") == 2);
  CHECK(box.run("gen-data --no_such_key 1 --out x.bin") == 2);
  CHECK(box.run("") == 2);
  CHECK(box.run("fly") == 2);
  CHECK(box.run("train --variant MISA") == 2);
  CHECK(box.run("ablate --variants ''") == 2);
}

TEST_CASE("train writes metrics, evaluation and checkpoint") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env line-reach --tier medium --n 2000 --seed 0 --out d.bin") == 0);
  REQUIRE(box.run(std::string("train --variant MISA --dataset d.bin --seed 0 --out_dir runs ") +
                  kSmallTrain) == 0);
  const fs::path dir = box.run_dir("runs", "train-0-");
  const json eval = load_json(dir / "eval.json");
  for (const char* key : {"mean_return", "normalized_score", "support_coverage"}) {
    CHECK(eval.contains(key));
  }
  std::ifstream metrics(dir / "metrics.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(metrics, line)) ++rows;
  CHECK(rows == 61);
  CHECK(fs::exists(dir / "checkpoint.bin"));
  const json cfg = load_json(dir / "config.json");
  CHECK(cfg.at("variant") == "MISA");
  CHECK(cfg.at("env") == "line-reach");
}

TEST_CASE("variant names resolve through the variant matrix") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env line-reach --tier medium --n 1000 --out d.bin") == 0);
  REQUIRE(box.run(std::string("train --variant BA --dataset d.bin --out_dir runs ") + kSmallTrain) == 0);
  const json cfg = load_json(box.run_dir("runs", "train-") / "config.json");
  CHECK(cfg.at("gamma1") == 0.0);
  CHECK(cfg.at("mi_grad") == "data_term_only");
  CHECK(box.run(std::string("train --variant CQL --dataset d.bin ") + kSmallTrain) == 2);
}

TEST_CASE("sparse-reward envs default to the larger penalty budget") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env chain-maze --tier medium --n 1000 --out d.bin") == 0);
  REQUIRE(box.run(std::string("train --dataset d.bin --out_dir a ") + kSmallTrain) == 0);
  CHECK(load_json(box.run_dir("a", "train-") / "config.json").at("tau") == 10.0);
  REQUIRE(box.run(std::string("train --dataset d.bin --tau 4 --out_dir b ") + kSmallTrain) == 0);
  CHECK(load_json(box.run_dir("b", "train-") / "config.json").at("tau") == 4.0);
}

TEST_CASE("two seeds give two metric files and an aggregate row") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env line-reach --tier medium --n 1000 --out d.bin") == 0);
  REQUIRE(box.run(std::string("train --dataset d.bin --seeds 3,4 --out_dir runs ") + kSmallTrain) == 0);
  const fs::path dir = box.run_dir("runs", "train-3-");
  CHECK(fs::exists(dir / "seed-3" / "metrics.csv"));
  CHECK(fs::exists(dir / "seed-4" / "metrics.csv"));
  std::ifstream summary(dir / "summary.csv");
  std::string line, last;
  std::size_t rows = 0;
  while (std::getline(summary, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 4);
  CHECK(last.rfind("mean,", 0) == 0);
}

TEST_CASE("identical runs give byte-identical CSV and the echo reproduces the run") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env line-reach --tier medium --n 1000 --out d.bin") == 0);
  const std::string args = std::string("train --dataset d.bin --seed 1 ") + kSmallTrain;
  REQUIRE(box.run(args + " --out_dir a") == 0);
  REQUIRE(box.run(args + " --out_dir b") == 0);
  const fs::path a = box.run_dir("a", "train-1-");
  const fs::path b = box.run_dir("b", "train-1-");
  CHECK(a.filename() == b.filename());
  for (std::string f : {"metrics.csv", "evals.csv", "summary.csv", "checkpoint.bin"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }

  REQUIRE(box.run("train --config '" + (a / "config.json").string() + "' --out_dir c") == 0);
  const fs::path c = box.run_dir("c", "train-1-");
  CHECK(c.filename() == a.filename());
  CHECK(slurp(c / "metrics.csv") == slurp(a / "metrics.csv"));
}

TEST_CASE("numerical abort exits with 3 and dumps the state") {
  Sandbox box;
  REQUIRE(box.run("gen-data --env line-reach --tier medium --n 1000 --out d.bin") == 0);
  CHECK(box.run(std::string("train --dataset d.bin --init_temperature 1e300 --out_dir runs ") +
                kSmallTrain) == 3);
  CHECK(box.log().find("nan_dump.ckpt") != std::string::npos);
  CHECK(fs::exists(box.run_dir("runs", "train-") / "nan_dump.ckpt"));
}

TEST_CASE("estimate-mi records the analytic value") {
  Sandbox box;
  REQUIRE(box.run("estimate-mi --joint gaussian --rho 0.8 --bounds BA --steps 50 --out_dir r8") == 0);
  const json e8 = load_json(box.run_dir("r8", "estimate-mi-") / "estimates.json");
  CHECK(e8.at("analytic_mi").get<double>() == doctest::Approx(0.5108).epsilon(1e-4));
  REQUIRE(box.run("estimate-mi --joint gaussian --rho 0.5 --bounds BA --steps 50 --out_dir r5") == 0);
  const json e5 = load_json(box.run_dir("r5", "estimate-mi-") / "estimates.json");
  CHECK(e5.at("analytic_mi").get<double>() == doctest::Approx(0.1438).epsilon(1e-4));
}

TEST_CASE("estimate-mi on an independent joint stays near zero") {
  Sandbox box;
  REQUIRE(box.run("estimate-mi --joint gaussian --rho 0.0 --steps 300 --k 16 --batch_size 64 "
                  "--out_dir r") == 0);
  const json e = load_json(box.run_dir("r", "estimate-mi-") / "estimates.json");
  REQUIRE(e.at("estimates").size() == 4);
  for (const auto& [name, est] : e.at("estimates").items()) {
    INFO(name);
    CHECK(std::abs(est.at("value").get<double>()) <= 0.05);
  }
}

TEST_CASE("gradcheck verdicts") {
  Sandbox box;
  CHECK(box.run("gradcheck --points 3 --samples 2000 --out_dir a") == 0);
  CHECK(box.log().find("PASS") != std::string::npos);
  CHECK(box.run("gradcheck --points 3 --samples 2000 --q zero --out_dir b") == 0);
  CHECK(box.run("gradcheck --points 3 --samples 2000 --q peaked --mi_grad data_term_only "
                "--out_dir c") == 1);
  CHECK(box.log().find("FAIL") != std::string::npos);
  const json report = load_json(box.run_dir("a", "gradcheck-") / "report.json");
  CHECK(report.contains("mean_cosine"));
}

TEST_CASE("ablate writes one row per variant") {
  Sandbox box;
  REQUIRE(box.run("ablate --variants BA,MISA-f,MISA-DV,MISA --envs line-reach --tier ood_gap "
                  "--seeds 0,1 --n 1000 --eval_episodes 2 --ood_states 50 --train.steps 20 "
                  "--train.hidden 8 --train.batch_size 16 --train.mc_samples 4 "
                  "--train.hmc.chains 2 --out_dir r") == 0);
  const fs::path dir = box.run_dir("r", "ablate-0-");
  std::ifstream summary(dir / "summary.csv");
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(summary, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);
  CHECK(rows[1].rfind("\"BA\"", 0) == 0);
  CHECK(rows[4].rfind("\"MISA\"", 0) == 0);
  CHECK(fs::exists(dir / "trend.json"));
  CHECK(fs::exists(dir / "runs.csv"));
}

}  // TEST_SUITE
