// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Run all criteria with no arguments or a single one with --criterion N.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "acceptance/additive_baseline.hpp"
#include "fd_check.hpp"
#include "oracle_ref.hpp"
#include "perfsage/ablation.hpp"
#include "perfsage/metrics.hpp"
#include "perfsage/sampler.hpp"
#include "test_util.hpp"

using namespace perfsage;
using namespace perfsage::testutil;
namespace fs = std::filesystem;

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
  return buf;
}

constexpr std::uint64_t kSplitSeed = 42;
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

TrainConfig desk_config(const std::string& target, int max_epochs = 150, int patience = 15) {
  TrainConfig cfg;  // desk model defaults: d_hidden 64, 4 gnn layers, 4x128 head, alpha 10
  cfg.target = target;
  cfg.max_epochs = max_epochs;
  cfg.patience = patience;
  cfg.seed = kSplitSeed;
  return cfg;
}

std::vector<LabeledSample> desk_mix(int n_small, std::int64_t s_small, int n_large,
                                    std::int64_t s_large, int n_vit, std::int64_t s_vit,
                                    const std::vector<OracleTarget>& targets) {
  std::vector<ModelGraph> graphs;
  for (auto& g : sample_dataset(design_space_preset("cnn_small", ScalePreset::kDesk), n_small, s_small))
    graphs.push_back(std::move(g));
  if (n_large > 0)
    for (auto& g :
         sample_dataset(design_space_preset("cnn_large", ScalePreset::kDesk), n_large, s_large))
      graphs.push_back(std::move(g));
  if (n_vit > 0)
    for (auto& g : sample_dataset(design_space_preset("vit", ScalePreset::kDesk), n_vit, s_vit))
      graphs.push_back(std::move(g));
  return label_dataset(graphs, targets, {});
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// 1. Generalized desk accuracy: median held-out MAPE < 5% per space and target.
Outcome criterion1() {
  auto data = desk_mix(1000, 1000, 600, 2000, 200, 3000,
                       {OracleTarget::kCpuLatency, OracleTarget::kAccelLatency,
                        OracleTarget::kAccelMemory});
  Outcome out;
  std::ostringstream detail;
  for (const char* target : {"cpu_latency", "accel_latency", "accel_memory"}) {
    double t0 = now_s();
    std::map<std::string, std::vector<double>> per_space;
    for (std::uint64_t seed : kSeeds) {
      TrainConfig cfg = desk_config(target);
      cfg.seed = seed;
      TrainEvalResult r = train_and_evaluate(cfg, data, kSplitSeed);
      for (const auto& [space, m] : r.per_space_mape) per_space[space].push_back(m);
    }
    detail << target << " [" << static_cast<int>(now_s() - t0) << "s]:";
    for (const auto& [space, ms] : per_space) {
      double med = median(ms);
      detail << " " << space << "=" << pct(med);
      if (med >= 0.05) out.pass = false;
    }
    detail << " | ";
  }
  out.detail = detail.str();
  return out;
}

// 2. The GNN beats a per-category additive linear baseline on the
// non-additive accelerator target by >= 2 points.
Outcome criterion2() {
  auto data = desk_mix(500, 1100, 300, 2100, 100, 3100, {OracleTarget::kAccelLatency});
  auto [train_idx, test_idx] = split_dataset(data, 0.8, kSplitSeed);
  std::vector<LabeledSample> train_set, test_set;
  for (size_t i : train_idx) train_set.push_back(data[i]);
  for (size_t i : test_idx) test_set.push_back(data[i]);

  AdditiveBaseline baseline;
  baseline.fit(train_set, "accel_latency");
  std::vector<double> bp, labels;
  for (const auto& s : test_set) {
    bp.push_back(baseline.predict(s.graph));
    labels.push_back(s.labels.at("accel_latency"));
  }
  double baseline_mape = mape(bp, labels);

  std::vector<double> gnn_mapes;
  for (std::uint64_t seed : kSeeds) {
    TrainConfig cfg = desk_config("accel_latency", 120, 12);
    cfg.seed = seed;
    gnn_mapes.push_back(train_and_evaluate(cfg, data, kSplitSeed).overall_mape);
  }
  double gnn = median(gnn_mapes);
  Outcome out;
  out.pass = baseline_mape - gnn >= 0.02;
  out.detail = "baseline=" + pct(baseline_mape) + " gnn=" + pct(gnn) +
               " margin=" + pct(baseline_mape - gnn) + " (needs >= 2.00%)";
  return out;
}

// 3. Categorical feature encoding helps (or at least never hurts) the
// generalized cpu-latency model.
Outcome criterion3() {
  auto data = desk_mix(400, 1200, 240, 2200, 80, 3200, {OracleTarget::kCpuLatency});
  TrainConfig cfg = desk_config("cpu_latency", 120, 12);
  AblationReport rep = run_ablation(AblationKind::kCfe, cfg, data, kSeeds);
  double with = rep.arms[0].median_overall;
  double without = rep.arms[1].median_overall;
  Outcome out;
  out.pass = with <= without;
  out.detail = "with_cfe=" + pct(with) + " without_cfe=" + pct(without);
  return out;
}

// 4. Upsampling improves (or preserves) the minority space on an imbalanced
// dataset.
Outcome criterion4() {
  auto data = desk_mix(900, 1300, 0, 0, 90, 3300, {OracleTarget::kCpuLatency});
  TrainConfig cfg = desk_config("cpu_latency", 120, 12);
  AblationReport rep = run_ablation(AblationKind::kDus, cfg, data, kSeeds);
  double with = rep.arms[0].median_space_mape.at("vit");
  double without = rep.arms[1].median_space_mape.at("vit");
  Outcome out;
  out.pass = with <= without;
  out.detail = "minority vit: with_dus=" + pct(with) + " without_dus=" + pct(without);
  return out;
}

// 5. The hybrid loss tames the top label decile, and the alpha sweep
// completes without divergence.
Outcome criterion5() {
  auto data = desk_mix(300, 1400, 200, 2400, 0, 0, {OracleTarget::kCpuLatency});
  TrainConfig cfg = desk_config("cpu_latency", 120, 12);
  AblationReport rep = run_ablation(AblationKind::kLoss, cfg, data, kSeeds);
  double a0 = 0, a10 = 0;
  for (const auto& arm : rep.arms) {
    if (arm.name == "alpha_0") a0 = arm.median_top_decile;
    if (arm.name == "alpha_10") a10 = arm.median_top_decile;
  }
  Outcome out;
  out.pass = a10 <= a0;
  out.detail = "top-decile mape: alpha10=" + pct(a10) + " alpha0=" + pct(a0) + "; " +
               std::to_string(rep.arms.size()) + " arms completed";
  return out;
}

// 6. Full-model analytic gradients match central finite differences.
Outcome criterion6() {
  double t0 = now_s();
  SplitMix64 rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig cfg;
    cfg.d_embed = 2 + static_cast<int>(rng.uniform_index(3));
    cfg.d_hidden = 3 + static_cast<int>(rng.uniform_index(6));  // <= 8
    cfg.gnn_layers = 1 + static_cast<int>(rng.uniform_index(3));
    cfg.head_layers = 2 + static_cast<int>(rng.uniform_index(3));
    cfg.head_hidden = 3 + static_cast<int>(rng.uniform_index(5));
    PredictorParams params = init_params(cfg, rng.next_u64());
    jitter_params(params, rng.next_u64());
    ModelGraph g = random_small_graph(rng, 10);
    double label = 1.0 + 5.0 * rng.uniform_real();
    worst = std::max(worst, full_model_fd_error(cfg, params, featurize(g), label));
  }
  double elapsed = now_s() - t0;
  Outcome out;
  out.pass = worst < 1e-4 && elapsed < 60.0;
  char buf[96];
  std::snprintf(buf, sizeof buf, "max relative error %.3g over 20 configs in %.1fs", worst,
                elapsed);
  out.detail = buf;
  return out;
}

// 7. Predictions are invariant under node relabeling.
Outcome criterion7() {
  SplitMix64 rng(707);
  ModelConfig cfg;  // desk defaults
  PredictorParams params = init_params(cfg, 7);
  double worst = 0.0;
  const char* spaces[] = {"cnn_small", "cnn_large", "vit", "cnn_kws"};
  for (int trial = 0; trial < 100; ++trial) {
    const char* space = spaces[trial % 4];
    ModelGraph g = sample_model(design_space_preset(space, ScalePreset::kDesk), 7000 + trial);
    std::vector<int> perm = random_permutation(static_cast<int>(g.nodes.size()), rng);
    double a = predict(cfg, params, featurize(g));
    double b = predict(cfg, params, featurize(permute_graph(g, perm)));
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-12));
  }
  Outcome out;
  out.pass = worst < 1e-9;
  char buf[64];
  std::snprintf(buf, sizeof buf, "max relative difference %.3g", worst);
  out.detail = buf;
  return out;
}

// 8. Bit-identical checkpoints and reports from identical runs.
Outcome criterion8() {
  auto data = desk_mix(80, 1500, 0, 0, 0, 0, {OracleTarget::kCpuLatency});
  TrainConfig cfg = desk_config("cpu_latency", 6, 6);
  cfg.model.d_hidden = 16;
  cfg.model.head_hidden = 16;
  cfg.seed = 4;

  auto run_once = [&](const std::string& tag) {
    auto [train_idx, test_idx] = split_dataset(data, 0.8, kSplitSeed);
    std::vector<LabeledSample> train_set, test_set;
    for (size_t i : train_idx) train_set.push_back(data[i]);
    for (size_t i : test_idx) test_set.push_back(data[i]);
    Checkpoint ckpt = train_with_auto_val(cfg, train_set);
    fs::path dir = fs::temp_directory_path();
    std::string cpath = (dir / ("psge_accept_" + tag + ".ckpt")).string();
    save_checkpoint(ckpt, cpath);
    EvalReport rep = evaluate(ckpt, test_set, 10);
    std::string rpath = (dir / ("psge_accept_" + tag + ".json")).string();
    std::ofstream(rpath, std::ios::binary) << eval_report_to_json(rep);
    return std::pair{cpath, rpath};
  };
  auto [c1, r1] = run_once("a");
  auto [c2, r2] = run_once("b");
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool ckpt_equal = slurp(c1) == slurp(c2);
  bool report_equal = slurp(r1) == slurp(r2);
  for (const auto& p : {c1, c2, r1, r2}) fs::remove(p);
  Outcome out;
  out.pass = ckpt_equal && report_equal;
  out.detail = std::string("checkpoints ") + (ckpt_equal ? "identical" : "DIFFER") +
               ", reports " + (report_equal ? "identical" : "DIFFER");
  return out;
}

// 9. Upsampling factors: mixture feasibility and minimality over random maps.
Outcome criterion9() {
  SplitMix64 rng(909);
  int failures = 0;
  for (int trial = 0; trial < 500; ++trial) {
    int spaces = 2 + static_cast<int>(rng.uniform_index(5));
    double min_frac = 0.02 + 0.2 * rng.uniform_real();
    if (min_frac * spaces >= 1.0) min_frac = 0.95 / spaces;
    std::map<std::string, std::int64_t> counts;
    for (int s = 0; s < spaces; ++s)
      counts["space" + std::to_string(s)] = 1 + rng.uniform_index(5000);
    auto factors = compute_upsample_factors(counts, min_frac);

    auto feasible = [&](const std::map<std::string, int>& f) {
      double total = 0;
      for (const auto& [s, n] : counts) total += static_cast<double>(f.at(s)) * n;
      for (const auto& [s, n] : counts)
        if (static_cast<double>(f.at(s)) * n / total < min_frac) return false;
      return true;
    };
    if (!feasible(factors)) {
      ++failures;
      continue;
    }
    for (const auto& [s, r] : factors) {
      if (r == 1) continue;
      auto reduced = factors;
      reduced[s] = r - 1;
      if (feasible(reduced)) {
        ++failures;
        break;
      }
    }
  }
  Outcome out;
  out.pass = failures == 0;
  out.detail = std::to_string(failures) + " violations over 500 random maps";
  return out;
}

// 10. Oracle cross-checks: exact peak-memory agreement and exact cpu
// additivity on chain concatenations.
Outcome criterion10() {
  SplitMix64 rng(1010);
  OracleConfig mem_cfg;
  int mem_mismatch = 0;
  for (int trial = 0; trial < 140; ++trial) {
    ModelGraph g = random_small_graph(rng, 14);
    if (accel_peak_memory(g, mem_cfg) != static_cast<double>(ref_peak_memory(g))) ++mem_mismatch;
  }
  for (int seed = 0; seed < 60; ++seed) {
    ModelGraph g = sample_model(design_space_preset(seed % 2 ? "vit" : "cnn_large",
                                                    ScalePreset::kDesk),
                                seed);
    if (accel_peak_memory(g, mem_cfg) != static_cast<double>(ref_peak_memory(g))) ++mem_mismatch;
  }

  OracleConfig cpu_cfg;
  cpu_cfg.throughput_macs_per_us = 1;  // integer-exact costs
  cpu_cfg.mem_bandwidth_bytes_per_us = 1;
  cpu_cfg.per_op_overhead_us = 1;
  const std::vector<OpType> ew = {OpType::kReshape, OpType::kTanh, OpType::kAdd, OpType::kMul};
  int add_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::int64_t elems = 1 + rng.uniform_index(400);
    int len1 = 1 + static_cast<int>(rng.uniform_index(6));
    int len2 = 1 + static_cast<int>(rng.uniform_index(6));
    ModelGraph g1 = elementwise_chain(len1, elems, {ew[rng.uniform_index(4)]});
    ModelGraph g2 = elementwise_chain(len2, elems, {ew[rng.uniform_index(4)]});
    ModelGraph joined = g1;
    int bridge = len1;
    joined.nodes.push_back(make_node(bridge, OpType::kReshape, {}, {elems}));
    joined.edges.emplace_back(len1 - 1, bridge);
    for (const auto& n : g2.nodes) {
      OperatorNode moved = n;
      moved.id += len1 + 1;
      joined.nodes.push_back(moved);
    }
    joined.edges.emplace_back(bridge, len1 + 1);
    for (const auto& [p, c] : g2.edges) joined.edges.emplace_back(p + len1 + 1, c + len1 + 1);
    joined.metadata = graph_stats(joined);
    ModelGraph bridge_only = elementwise_chain(1, elems, {OpType::kReshape});
    double expect =
        cpu_latency(g1, cpu_cfg) + cpu_latency(g2, cpu_cfg) + cpu_latency(bridge_only, cpu_cfg);
    if (cpu_latency(joined, cpu_cfg) != expect) ++add_mismatch;
  }
  Outcome out;
  out.pass = mem_mismatch == 0 && add_mismatch == 0;
  out.detail = std::to_string(mem_mismatch) + " memory mismatches over 200 graphs, " +
               std::to_string(add_mismatch) + " additivity mismatches over 100 concatenations";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  Outcome (*criteria[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                             criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0;
  for (int c = 1; c <= 10; ++c) {
    if (only != 0 && only != c) continue;
    Outcome out;
    try {
      out = criteria[c - 1]();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::cout << "C" << c << " " << (out.pass ? "PASS" : "FAIL") << "  " << out.detail << "\n";
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
