#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "perfsage/ablation.hpp"
#include "perfsage/metrics.hpp"
#include "perfsage/sampler.hpp"
#include "test_util.hpp"

using namespace perfsage;

TEST_CASE("mape basics") {
  CHECK(mape({5.0, 6.0}, {5.0, 6.0}) == 0.0);
  CHECK(mape({110.0, 90.0}, {100.0, 100.0}) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK_THROWS_AS(mape({}, {}), Error);
  CHECK_THROWS_AS(mape({1.0}, {0.0}), Error);
  CHECK_THROWS_AS(mape({1.0}, {1.0, 2.0}), Error);
}

TEST_CASE("mape is scale invariant") {
  std::vector<double> preds = {3.5, 8.25, 1.125}, labels = {4.0, 8.0, 1.0};
  std::vector<double> preds4, labels4;
  for (double v : preds) preds4.push_back(4.0 * v);
  for (double v : labels) labels4.push_back(4.0 * v);
  CHECK(mape(preds4, labels4) == mape(preds, labels));
}

TEST_CASE("binned report over the documented latency range") {
  std::vector<double> labels, preds;
  for (double y = 2.0; y <= 34.0; y += 1.0) {
    labels.push_back(y);
    preds.push_back(y * 1.1);
  }
  BinnedReport rep = binned_report(preds, labels, 8);
  REQUIRE(rep.bins.size() == 8);
  CHECK(rep.bins[0].lo == 2.0);
  CHECK(rep.bins[7].hi == 34.0);
  CHECK(rep.bins[1].lo == doctest::Approx(6.0).epsilon(1e-12));  // width 4
  int total = 0;
  for (const Bin& b : rep.bins) total += b.count;
  CHECK(total == static_cast<int>(labels.size()));
  for (const Bin& b : rep.bins)
    if (b.count) CHECK(b.mape == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("one sample lands in one populated bin") {
  BinnedReport rep = binned_report({11.0}, {10.0}, 4);
  CHECK(rep.degenerate);  // single label: degenerate range
  REQUIRE(rep.bins.size() == 1);
  CHECK(rep.bins[0].count == 1);
  CHECK(rep.bins[0].mape == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("degenerate all-equal labels are flagged") {
  BinnedReport rep = binned_report({1.0, 2.0, 3.0}, {2.0, 2.0, 2.0}, 5);
  CHECK(rep.degenerate);
  CHECK(rep.bins.size() == 1);
  CHECK(rep.bins[0].count == 3);
}

TEST_CASE("overall mape equals the count-weighted mean of bin mapes") {
  SplitMix64 rng(3);
  std::vector<double> preds, labels;
  for (int i = 0; i < 500; ++i) {
    double y = 1.0 + 50.0 * rng.uniform_real();
    labels.push_back(y);
    preds.push_back(y * (0.8 + 0.4 * rng.uniform_real()));
  }
  BinnedReport rep = binned_report(preds, labels, 10);
  double weighted = 0;
  int total = 0;
  for (const Bin& b : rep.bins) {
    weighted += b.mape * b.count;
    total += b.count;
  }
  CHECK(total == 500);
  CHECK(std::abs(weighted / total - mape(preds, labels)) < 1e-12);
}

TEST_CASE("top decile mape picks the heavy labels") {
  std::vector<double> labels, preds;
  for (int i = 1; i <= 100; ++i) {
    labels.push_back(static_cast<double>(i));
    preds.push_back(static_cast<double>(i) * (i >= 90 ? 1.5 : 1.0));  // threshold element included
  }
  CHECK(top_decile_mape(preds, labels) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("median helper") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("alpha sweep on constant labels keeps mape near zero") {
  auto graphs = sample_dataset(design_space_preset("cnn_small", ScalePreset::kDesk), 40, 0);
  auto data = label_dataset(graphs, {OracleTarget::kCpuLatency}, {});
  for (auto& s : data) s.labels["cpu_latency"] = 8.0;

  TrainConfig cfg;
  cfg.model.d_embed = 3;
  cfg.model.d_hidden = 8;
  cfg.model.gnn_layers = 2;
  cfg.model.head_layers = 2;
  cfg.model.head_hidden = 8;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  cfg.batch_size = 8;
  cfg.optimizer.lr = 2e-2;  // constant target, converge fast

  AblationReport rep = run_ablation(AblationKind::kLoss, cfg, data, {1});
  REQUIRE(rep.arms.size() == 4);
  for (const auto& arm : rep.arms) CHECK(arm.median_overall < 0.06);
}
