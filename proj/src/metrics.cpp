#include "perfsage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "perfsage/rng.hpp"

namespace perfsage {

using json = nlohmann::json;

double mape(const std::vector<double>& preds, const std::vector<double>& labels) {
  if (preds.empty() || preds.size() != labels.size())
    throw Error(ErrorCode::kInvalidArgument, "mape needs equal-length non-empty inputs");
  double s = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] <= 0.0) throw Error(ErrorCode::kInvalidArgument, "mape labels must be positive");
    s += std::abs(preds[i] - labels[i]) / labels[i];
  }
  return s / static_cast<double>(preds.size());
}

BinnedReport binned_report(const std::vector<double>& preds, const std::vector<double>& labels,
                           int n_bins) {
  if (n_bins < 2) throw Error(ErrorCode::kInvalidArgument, "binned_report needs n_bins >= 2");
  if (preds.empty() || preds.size() != labels.size())
    throw Error(ErrorCode::kInvalidArgument, "binned_report needs equal-length non-empty inputs");
  const double lo = *std::min_element(labels.begin(), labels.end());
  const double hi = *std::max_element(labels.begin(), labels.end());

  BinnedReport rep;
  if (lo == hi) {
    rep.degenerate = true;
    Bin b{lo, hi, 0, 0.0, 0.0};
    for (size_t i = 0; i < labels.size(); ++i) {
      double ape = std::abs(preds[i] - labels[i]) / labels[i];
      b.mape += ape;
      b.max_ape = std::max(b.max_ape, ape);
      ++b.count;
    }
    b.mape /= static_cast<double>(b.count);
    rep.bins.push_back(b);
    return rep;
  }

  const double width = (hi - lo) / static_cast<double>(n_bins);
  rep.bins.resize(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    rep.bins[k].lo = lo + width * k;
    rep.bins[k].hi = k + 1 == n_bins ? hi : lo + width * (k + 1);
  }
  for (size_t i = 0; i < labels.size(); ++i) {
    int k = static_cast<int>((labels[i] - lo) / width);
    if (k >= n_bins) k = n_bins - 1;  // right-closed last bin
    double ape = std::abs(preds[i] - labels[i]) / labels[i];
    rep.bins[k].mape += ape;
    rep.bins[k].max_ape = std::max(rep.bins[k].max_ape, ape);
    ++rep.bins[k].count;
  }
  for (Bin& b : rep.bins)
    if (b.count > 0) b.mape /= static_cast<double>(b.count);
  return rep;
}

double top_decile_mape(const std::vector<double>& preds, const std::vector<double>& labels) {
  if (preds.empty() || preds.size() != labels.size())
    throw Error(ErrorCode::kInvalidArgument, "top_decile_mape needs non-empty inputs");
  std::vector<double> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  const double threshold = sorted[static_cast<size_t>(0.9 * static_cast<double>(sorted.size() - 1))];
  double s = 0.0;
  int n = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < threshold) continue;
    s += std::abs(preds[i] - labels[i]) / labels[i];
    ++n;
  }
  return s / static_cast<double>(n);
}

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<LabeledSample>& samples,
                    int n_bins) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot evaluate an empty dataset");
  EvalReport rep;
  rep.target = ckpt.target;
  rep.dataset_hash = hash_hex(dataset_hash(samples));
  rep.checkpoint_hash = ckpt.config_hash;

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> grouped;
  std::vector<double> all_preds, all_labels;
  for (const auto& s : samples) {
    auto it = s.labels.find(ckpt.target);
    if (it == s.labels.end())
      throw Error(ErrorCode::kInvalidArgument, "sample missing label '" + ckpt.target + "'");
    double pred = predict_sample(ckpt, s.graph);
    grouped[s.design_space].first.push_back(pred);
    grouped[s.design_space].second.push_back(it->second);
    all_preds.push_back(pred);
    all_labels.push_back(it->second);
  }
  for (const auto& [space, pl] : grouped) {
    SpaceReport sr;
    sr.mape = mape(pl.first, pl.second);
    sr.count = static_cast<int>(pl.first.size());
    sr.bins = binned_report(pl.first, pl.second, n_bins);
    rep.per_space[space] = std::move(sr);
  }
  rep.overall.mape = mape(all_preds, all_labels);
  rep.overall.count = static_cast<int>(all_preds.size());
  rep.overall.bins = binned_report(all_preds, all_labels, n_bins);
  return rep;
}

namespace {

json bins_to_json(const BinnedReport& rep) {
  json bins = json::array();
  for (const Bin& b : rep.bins)
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"count", b.count},
                    {"mape", b.mape},
                    {"max_ape", b.max_ape}});
  return {{"degenerate", rep.degenerate}, {"bins", bins}};
}

json space_to_json(const SpaceReport& sr) {
  return {{"mape", sr.mape}, {"count", sr.count}, {"binned", bins_to_json(sr.bins)}};
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  json spaces = json::object();
  for (const auto& [space, sr] : report.per_space) spaces[space] = space_to_json(sr);
  json doc = {{"report_version", 1},
              {"target", report.target},
              {"per_space", spaces},
              {"overall", space_to_json(report.overall)},
              {"provenance",
               {{"checkpoint_hash", report.checkpoint_hash},
                {"dataset_hash", report.dataset_hash}}}};
  return doc.dump(2);
}

std::string eval_report_table(const EvalReport& report) {
  std::ostringstream out;
  out << "target: " << report.target << "\n";
  out << "space               samples   mape\n";
  char line[128];
  for (const auto& [space, sr] : report.per_space) {
    std::snprintf(line, sizeof line, "%-20s %6d   %6.3f%%\n", space.c_str(), sr.count,
                  sr.mape * 100.0);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-20s %6d   %6.3f%%\n", "(overall)", report.overall.count,
                report.overall.mape * 100.0);
  out << line;
  return out.str();
}

}  // namespace perfsage
