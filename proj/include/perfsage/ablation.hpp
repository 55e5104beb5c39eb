#pragma once

#include <map>
#include <string>
#include <vector>

#include "perfsage/metrics.hpp"

namespace perfsage {

enum class AblationKind { kCfe, kDus, kLoss };

bool parse_ablation_kind(const std::string& name, AblationKind* out);

// One train/eval cycle: split, carve validation, train, measure test error.
struct TrainEvalResult {
  Checkpoint checkpoint;
  std::map<std::string, double> per_space_mape;
  double overall_mape = 0.0;
  double top_decile = 0.0;  // MAPE over the top label decile of the test set
};

TrainEvalResult train_and_evaluate(const TrainConfig& cfg,
                                   const std::vector<LabeledSample>& data,
                                   std::uint64_t split_seed);

// One ablation arm (a named config variant) measured over several seeds.
struct AblationArm {
  std::string name;
  std::vector<std::map<std::string, double>> per_seed_space_mape;
  std::vector<double> per_seed_overall;
  std::vector<double> per_seed_top_decile;
  std::map<std::string, double> median_space_mape;
  double median_overall = 0.0;
  double median_top_decile = 0.0;
};

struct AblationReport {
  AblationKind kind;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationArm> arms;
};

// cfe: per-category encoders vs one shared encoder; dus: upsampling on/off;
// loss: alpha sweep over {0, 1, 10, 100}. The train/test split is held
// fixed across arms and seeds so numbers stay comparable.
AblationReport run_ablation(AblationKind kind, const TrainConfig& base_cfg,
                            const std::vector<LabeledSample>& data,
                            const std::vector<std::uint64_t>& seeds);

std::string ablation_report_to_json(const AblationReport& report);

double median(std::vector<double> values);

}  // namespace perfsage
