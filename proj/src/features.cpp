#include "perfsage/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "perfsage/oracle.hpp"

namespace perfsage {

const std::array<const char*, kNodeFeatureDim>& node_slot_names() {
  static const std::array<const char*, kNodeFeatureDim> names = {
      "kernel_h",   "kernel_w",         "stride_h",  "stride_w",
      "padding",    "in_channels",      "out_channels", "depth_multiplier",
      "num_heads",  "mlp_ratio_x100",   "log_param_count", "log_macs",
  };
  return names;
}

FeaturizedGraph featurize(const ModelGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  FeaturizedGraph fg;
  fg.n = n;
  fg.node_feats = Tensor2(n, kNodeFeatureDim);
  fg.edge_feats = Tensor2(n, kEdgeFeatureDim);
  fg.categories.resize(n);
  fg.adjacency.resize(n);
  fg.out_neighbors.resize(n);

  for (int i = 0; i < n; ++i) {
    const OperatorNode& node = g.nodes[i];
    if (node.id != i)
      throw Error(ErrorCode::kInvalidArgument, "featurize requires dense node ids");
    fg.categories[i] = static_cast<int>(node.op_type);

    double* f = fg.node_feats.row(i);
    f[kSlotKernelH] = static_cast<double>(node.hyper("kernel_h"));
    f[kSlotKernelW] = static_cast<double>(node.hyper("kernel_w"));
    f[kSlotStrideH] = static_cast<double>(node.hyper("stride_h"));
    f[kSlotStrideW] = static_cast<double>(node.hyper("stride_w"));
    f[kSlotPadding] = static_cast<double>(node.hyper("padding"));
    f[kSlotInChannels] = static_cast<double>(node.hyper("in_channels"));
    f[kSlotOutChannels] = static_cast<double>(node.hyper("out_channels"));
    f[kSlotDepthMultiplier] = static_cast<double>(node.hyper("depth_multiplier"));
    f[kSlotNumHeads] = static_cast<double>(node.hyper("num_heads"));
    f[kSlotMlpRatioX100] = static_cast<double>(node.hyper("mlp_ratio_x100"));
    f[kSlotLogParamCount] = std::log1p(static_cast<double>(node_param_count(node)));
    f[kSlotLogMacs] = std::log1p(static_cast<double>(op_macs(node)));

    double* e = fg.edge_feats.row(i);
    for (size_t d = 0; d < node.output_shape.size() && d < 4; ++d)
      e[d] = static_cast<double>(node.output_shape[d]);
    e[4] = std::log1p(static_cast<double>(node.output_elems()));
  }

  std::vector<std::set<int>> und(n), out(n);
  for (const auto& [p, c] : g.edges) {
    if (p == c) continue;
    und[p].insert(c);
    und[c].insert(p);
    out[p].insert(c);
  }
  for (int i = 0; i < n; ++i) {
    fg.adjacency[i].assign(und[i].begin(), und[i].end());
    fg.out_neighbors[i].assign(out[i].begin(), out[i].end());
  }
  return fg;
}

NormStats compute_norm_stats(const std::vector<FeaturizedGraph>& train_set) {
  if (train_set.empty())
    throw Error(ErrorCode::kInvalidArgument, "cannot fit normalization on an empty set");
  const int dim = kNodeFeatureDim + kEdgeFeatureDim;
  NormStats stats;
  stats.mean.assign(dim, 0.0);
  stats.stdev.assign(dim, 0.0);
  std::int64_t count = 0;
  for (const auto& fg : train_set) {
    count += fg.n;
    for (int i = 0; i < fg.n; ++i) {
      for (int j = 0; j < kNodeFeatureDim; ++j) stats.mean[j] += fg.node_feats.at(i, j);
      for (int j = 0; j < kEdgeFeatureDim; ++j)
        stats.mean[kNodeFeatureDim + j] += fg.edge_feats.at(i, j);
    }
  }
  for (double& m : stats.mean) m /= static_cast<double>(count);
  for (const auto& fg : train_set) {
    for (int i = 0; i < fg.n; ++i) {
      for (int j = 0; j < kNodeFeatureDim; ++j) {
        double d = fg.node_feats.at(i, j) - stats.mean[j];
        stats.stdev[j] += d * d;
      }
      for (int j = 0; j < kEdgeFeatureDim; ++j) {
        double d = fg.edge_feats.at(i, j) - stats.mean[kNodeFeatureDim + j];
        stats.stdev[kNodeFeatureDim + j] += d * d;
      }
    }
  }
  for (double& s : stats.stdev) s = std::max(std::sqrt(s / static_cast<double>(count)), 1e-6);
  return stats;
}

void apply_norm(const NormStats& stats, FeaturizedGraph* fg) {
  for (int i = 0; i < fg->n; ++i) {
    for (int j = 0; j < kNodeFeatureDim; ++j)
      fg->node_feats.at(i, j) = (fg->node_feats.at(i, j) - stats.mean[j]) / stats.stdev[j];
    for (int j = 0; j < kEdgeFeatureDim; ++j)
      fg->edge_feats.at(i, j) =
          (fg->edge_feats.at(i, j) - stats.mean[kNodeFeatureDim + j]) /
          stats.stdev[kNodeFeatureDim + j];
  }
}

std::pair<NormStats, std::vector<FeaturizedGraph>> standardize(
    const std::vector<FeaturizedGraph>& train_set) {
  NormStats stats = compute_norm_stats(train_set);
  std::vector<FeaturizedGraph> out = train_set;
  for (auto& fg : out) apply_norm(stats, &fg);
  return {std::move(stats), std::move(out)};
}

}  // namespace perfsage
