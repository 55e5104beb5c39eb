#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "perfsage/graph.hpp"
#include "perfsage/tensor.hpp"

namespace perfsage {

inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr int kNodeFeatureDim = 12;
inline constexpr int kEdgeFeatureDim = 5;

// Node slot order is fixed and versioned. Slots a type does not declare are
// exactly zero; magnitude slots carry ln(1 + x).
enum NodeSlot {
  kSlotKernelH = 0,
  kSlotKernelW,
  kSlotStrideH,
  kSlotStrideW,
  kSlotPadding,
  kSlotInChannels,
  kSlotOutChannels,
  kSlotDepthMultiplier,
  kSlotNumHeads,
  kSlotMlpRatioX100,
  kSlotLogParamCount,
  kSlotLogMacs,
};

const std::array<const char*, kNodeFeatureDim>& node_slot_names();

struct FeaturizedGraph {
  int n = 0;
  Tensor2 node_feats;  // n x 12, row i is node id i
  Tensor2 edge_feats;  // n x 5: output dims right-padded, log output elems
  std::vector<int> categories;
  std::vector<std::vector<int>> adjacency;      // undirected, sorted, no self-loops
  std::vector<std::vector<int>> out_neighbors;  // directed view for ablations
  std::optional<double> label;
};

// Deterministic translation of a valid graph into fixed-length features.
FeaturizedGraph featurize(const ModelGraph& g);

// Per-slot affine normalization fitted on training graphs only and stored in
// the checkpoint. Slot order: the 12 node slots, then the 5 edge slots.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stdev;  // floored at 1e-6
};

NormStats compute_norm_stats(const std::vector<FeaturizedGraph>& train_set);
void apply_norm(const NormStats& stats, FeaturizedGraph* fg);

// Fit on the given set and return (stats, transformed copies).
std::pair<NormStats, std::vector<FeaturizedGraph>> standardize(
    const std::vector<FeaturizedGraph>& train_set);

}  // namespace perfsage
