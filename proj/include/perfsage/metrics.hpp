#pragma once

#include <map>
#include <string>
#include <vector>

#include "perfsage/trainer.hpp"

namespace perfsage {

// Mean absolute percentage error as a fraction. Labels must be positive.
double mape(const std::vector<double>& preds, const std::vector<double>& labels);

struct Bin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double mape = 0.0;     // 0 for empty bins
  double max_ape = 0.0;
};

struct BinnedReport {
  std::vector<Bin> bins;  // equal width over [min(labels), max(labels)]
  bool degenerate = false;  // all labels identical: single-bin report
};

// Right-closed last bin; every sample lands in exactly one bin.
BinnedReport binned_report(const std::vector<double>& preds, const std::vector<double>& labels,
                           int n_bins);

// MAPE over the samples whose label reaches the 90th percentile.
double top_decile_mape(const std::vector<double>& preds, const std::vector<double>& labels);

struct SpaceReport {
  double mape = 0.0;
  int count = 0;
  BinnedReport bins;
};

struct EvalReport {
  std::string target;
  std::map<std::string, SpaceReport> per_space;
  SpaceReport overall;
  std::string checkpoint_hash;
  std::string dataset_hash;
};

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<LabeledSample>& samples,
                    int n_bins);

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);  // human-readable

}  // namespace perfsage
