#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("PERFSAGE_BIN");
  REQUIRE(b != nullptr);
  return b;
}

int run(const std::string& args) {
  std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("perfsage_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("") == 2);
  CHECK(run("sample") == 2);               // missing required options
  CHECK(run("frobnicate --x 1") == 2);     // unknown subcommand
  CHECK(run("--help") == 0);
}

TEST_CASE("full pipeline at tiny scale") {
  TempDir dir;
  std::string graphs = dir / "graphs.jsonl";
  std::string labeled = dir / "labeled.jsonl";
  std::string ckpt = dir / "model.ckpt";
  std::string report = dir / "report.json";

  CHECK(run("sample --space cnn_small --n 30 --seed 0 --out " + graphs) == 0);
  CHECK(fs::exists(graphs));

  // duplicate --out without --force fails with the input-format code
  CHECK(run("sample --space cnn_small --n 1 --seed 0 --out " + graphs) == 3);
  CHECK(run("sample --space cnn_small --n 30 --seed 0 --out " + graphs + " --force") == 0);

  CHECK(run("label --in " + graphs + " --targets cpu_latency --out " + labeled) == 0);

  nlohmann::json cfg = {
      {"target", "cpu_latency"},
      {"max_epochs", 3},
      {"patience", 3},
      {"batch_size", 8},
      {"seed", 1},
      {"model",
       {{"d_embed", 3}, {"d_hidden", 8}, {"gnn_layers", 2}, {"head_layers", 2}, {"head_hidden", 8}}},
  };
  std::string cfg_path = dir / "train.json";
  std::ofstream(cfg_path) << cfg.dump();

  std::string test_out = dir / "test.jsonl";
  CHECK(run("train --data " + labeled + " --config " + cfg_path + " --out " + ckpt +
            " --test-out " + test_out) == 0);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ckpt + ".manifest.json"));
  CHECK(fs::exists(test_out));

  std::string before_ckpt = slurp(ckpt);
  std::string before_data = slurp(test_out);
  CHECK(run("eval --ckpt " + ckpt + " --data " + test_out + " --report " + report) == 0);
  CHECK(fs::exists(report));
  // eval is read-only
  CHECK(slurp(ckpt) == before_ckpt);
  CHECK(slurp(test_out) == before_data);

  auto rep = nlohmann::json::parse(slurp(report));
  CHECK(rep["target"] == "cpu_latency");
  int total = 0;
  for (const auto& b : rep["overall"]["binned"]["bins"]) total += b["count"].get<int>();
  CHECK(total == rep["overall"]["count"].get<int>());

  // predict one graph from the bundle
  std::ifstream in(graphs);
  std::string line;
  std::getline(in, line);
  std::string one = dir / "one.json";
  std::ofstream(one) << line;
  CHECK(run("predict --ckpt " + ckpt + " --graph " + one) == 0);

  // missing input file -> 3
  CHECK(run("eval --ckpt " + ckpt + " --data " + (dir / "nope.jsonl") + " --report " + report) == 3);

  // corrupt checkpoint version byte -> 5
  std::string bad = dir / "bad.ckpt";
  std::string bytes = slurp(ckpt);
  bytes[4] = 9;
  std::ofstream(bad, std::ios::binary) << bytes;
  CHECK(run("predict --ckpt " + bad + " --graph " + one) == 5);
}

TEST_CASE("ablate runs at tiny scale") {
  TempDir dir;
  std::string graphs = dir / "g.jsonl";
  std::string labeled = dir / "l.jsonl";
  REQUIRE(run("sample --space cnn_small --n 24 --seed 5 --out " + graphs) == 0);
  REQUIRE(run("label --in " + graphs + " --targets cpu_latency --out " + labeled) == 0);
  nlohmann::json cfg = {
      {"target", "cpu_latency"},
      {"max_epochs", 2},
      {"patience", 2},
      {"batch_size", 8},
      {"seed", 1},
      {"model",
       {{"d_embed", 2}, {"d_hidden", 6}, {"gnn_layers", 1}, {"head_layers", 2}, {"head_hidden", 6}}},
  };
  std::string cfg_path = dir / "cfg.json";
  std::ofstream(cfg_path) << cfg.dump();
  std::string out = dir / "ablation.json";
  CHECK(run("ablate --kind cfe --config " + cfg_path + " --data " + labeled +
            " --seeds 1 --out " + out) == 0);
  auto rep = nlohmann::json::parse(slurp(out));
  CHECK(rep["arms"].size() == 2);
  CHECK(run("ablate --kind bogus --config " + cfg_path + " --data " + labeled +
            " --seeds 1 --out " + out) == 3);
}
