#include "perfsage/ablation.hpp"

#include <algorithm>

#include "json.hpp"

namespace perfsage {

using json = nlohmann::json;

bool parse_ablation_kind(const std::string& name, AblationKind* out) {
  if (name == "cfe") *out = AblationKind::kCfe;
  else if (name == "dus") *out = AblationKind::kDus;
  else if (name == "loss") *out = AblationKind::kLoss;
  else return false;
  return true;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "median of nothing");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

TrainEvalResult train_and_evaluate(const TrainConfig& cfg,
                                   const std::vector<LabeledSample>& data,
                                   std::uint64_t split_seed) {
  auto [train_idx, test_idx] = split_dataset(data, cfg.split_fraction, split_seed);
  std::vector<LabeledSample> train_set, test_set;
  train_set.reserve(train_idx.size());
  test_set.reserve(test_idx.size());
  for (size_t i : train_idx) train_set.push_back(data[i]);
  for (size_t i : test_idx) test_set.push_back(data[i]);

  TrainEvalResult result;
  result.checkpoint = train_with_auto_val(cfg, train_set);

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> grouped;
  std::vector<double> preds, labels;
  for (const auto& s : test_set) {
    double pred = predict_sample(result.checkpoint, s.graph);
    double y = s.labels.at(cfg.target);
    grouped[s.design_space].first.push_back(pred);
    grouped[s.design_space].second.push_back(y);
    preds.push_back(pred);
    labels.push_back(y);
  }
  for (const auto& [space, pl] : grouped)
    result.per_space_mape[space] = mape(pl.first, pl.second);
  result.overall_mape = mape(preds, labels);
  result.top_decile = top_decile_mape(preds, labels);
  return result;
}

namespace {

AblationArm measure_arm(const std::string& name, const TrainConfig& cfg,
                        const std::vector<LabeledSample>& data,
                        const std::vector<std::uint64_t>& seeds, std::uint64_t split_seed) {
  AblationArm arm;
  arm.name = name;
  for (std::uint64_t seed : seeds) {
    TrainConfig c = cfg;
    c.seed = seed;
    TrainEvalResult r = train_and_evaluate(c, data, split_seed);
    arm.per_seed_space_mape.push_back(r.per_space_mape);
    arm.per_seed_overall.push_back(r.overall_mape);
    arm.per_seed_top_decile.push_back(r.top_decile);
  }
  std::map<std::string, std::vector<double>> by_space;
  for (const auto& m : arm.per_seed_space_mape)
    for (const auto& [space, v] : m) by_space[space].push_back(v);
  for (const auto& [space, vs] : by_space) arm.median_space_mape[space] = median(vs);
  arm.median_overall = median(arm.per_seed_overall);
  arm.median_top_decile = median(arm.per_seed_top_decile);
  return arm;
}

}  // namespace

AblationReport run_ablation(AblationKind kind, const TrainConfig& base_cfg,
                            const std::vector<LabeledSample>& data,
                            const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "ablation needs at least one seed");
  AblationReport report;
  report.kind = kind;
  report.seeds = seeds;
  const std::uint64_t split_seed = base_cfg.seed;

  switch (kind) {
    case AblationKind::kCfe: {
      TrainConfig with = base_cfg;
      with.model.use_cfe = true;
      TrainConfig without = base_cfg;
      without.model.use_cfe = false;
      report.arms.push_back(measure_arm("with_cfe", with, data, seeds, split_seed));
      report.arms.push_back(measure_arm("without_cfe", without, data, seeds, split_seed));
      break;
    }
    case AblationKind::kDus: {
      TrainConfig with = base_cfg;
      with.use_upsampling = true;
      TrainConfig without = base_cfg;
      without.use_upsampling = false;
      report.arms.push_back(measure_arm("with_dus", with, data, seeds, split_seed));
      report.arms.push_back(measure_arm("without_dus", without, data, seeds, split_seed));
      break;
    }
    case AblationKind::kLoss: {
      for (double alpha : {0.0, 1.0, 10.0, 100.0}) {
        TrainConfig c = base_cfg;
        c.model.alpha_mse = alpha;
        report.arms.push_back(
            measure_arm("alpha_" + std::to_string(static_cast<int>(alpha)), c, data, seeds,
                        split_seed));
      }
      break;
    }
  }
  return report;
}

std::string ablation_report_to_json(const AblationReport& report) {
  const char* kind = report.kind == AblationKind::kCfe   ? "cfe"
                     : report.kind == AblationKind::kDus ? "dus"
                                                         : "loss";
  json arms = json::array();
  for (const AblationArm& arm : report.arms) {
    json per_seed = json::array();
    for (size_t i = 0; i < arm.per_seed_overall.size(); ++i) {
      json spaces = json::object();
      for (const auto& [space, v] : arm.per_seed_space_mape[i]) spaces[space] = v;
      per_seed.push_back({{"seed", report.seeds[i]},
                          {"per_space_mape", spaces},
                          {"overall_mape", arm.per_seed_overall[i]},
                          {"top_decile_mape", arm.per_seed_top_decile[i]}});
    }
    json med_spaces = json::object();
    for (const auto& [space, v] : arm.median_space_mape) med_spaces[space] = v;
    arms.push_back({{"name", arm.name},
                    {"per_seed", per_seed},
                    {"median",
                     {{"per_space_mape", med_spaces},
                      {"overall_mape", arm.median_overall},
                      {"top_decile_mape", arm.median_top_decile}}}});
  }
  json doc = {{"report_version", 1}, {"kind", kind}, {"arms", arms}};
  return doc.dump(2);
}

}  // namespace perfsage
