#pragma once

#include <map>
#include <string>
#include <vector>

#include "perfsage/features.hpp"
#include "perfsage/graph.hpp"
#include "perfsage/rng.hpp"

namespace perfsage::testutil {

inline OperatorNode make_node(int id, OpType t, std::map<std::string, std::int64_t> hp,
                              std::vector<std::int64_t> shape) {
  return OperatorNode{id, t, std::move(hp), std::move(shape)};
}

inline ModelGraph finalize(ModelGraph g) {
  g.metadata = graph_stats(g);
  return g;
}

inline ModelGraph single_conv_graph() {
  ModelGraph g;
  g.design_space = "fixture";
  g.nodes.push_back(make_node(0, OpType::kConv2d,
                              {{"kernel_h", 3}, {"kernel_w", 3}, {"stride_h", 1}, {"stride_w", 1},
                               {"padding", 1}, {"in_channels", 8}, {"out_channels", 16}},
                              {8, 8, 16}));
  return finalize(std::move(g));
}

// Chain of shape-preserving elementwise ops, each with `elems` elements.
inline ModelGraph elementwise_chain(int length, std::int64_t elems,
                                    const std::vector<OpType>& ops = {OpType::kReshape,
                                                                      OpType::kTanh,
                                                                      OpType::kAdd}) {
  ModelGraph g;
  g.design_space = "fixture";
  for (int i = 0; i < length; ++i) {
    g.nodes.push_back(make_node(i, ops[i % ops.size()], {}, {elems}));
    if (i > 0) g.edges.emplace_back(i - 1, i);
  }
  return finalize(std::move(g));
}

// Small random DAG over the full op vocabulary with required hyperparameters
// filled in; used where only featurization shape matters, not semantics.
inline ModelGraph random_small_graph(SplitMix64& rng, int max_nodes = 10) {
  ModelGraph g;
  g.design_space = "fixture";
  const int n = 2 + static_cast<int>(rng.uniform_index(max_nodes - 1));
  for (int i = 0; i < n; ++i) {
    OpType t = static_cast<OpType>(rng.uniform_index(kOpTypeCount));
    std::map<std::string, std::int64_t> hp;
    for (const auto& key : required_hyperparams(t)) hp[key] = 1 + rng.uniform_index(4);
    std::vector<std::int64_t> shape;
    const int dims = 1 + static_cast<int>(rng.uniform_index(3));
    for (int d = 0; d < dims; ++d) shape.push_back(1 + rng.uniform_index(6));
    g.nodes.push_back(make_node(i, t, std::move(hp), std::move(shape)));
    if (i > 0) g.edges.emplace_back(static_cast<int>(rng.uniform_index(i)), i);
  }
  return finalize(std::move(g));
}

// Relabel nodes by permutation: new id of old node i is perm[i].
inline ModelGraph permute_graph(const ModelGraph& g, const std::vector<int>& perm) {
  ModelGraph out;
  out.design_space = g.design_space;
  out.seed = g.seed;
  out.nodes.resize(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    OperatorNode n = g.nodes[i];
    n.id = perm[i];
    out.nodes[perm[i]] = std::move(n);
  }
  for (const auto& [p, c] : g.edges) out.edges.emplace_back(perm[p], perm[c]);
  out.metadata = graph_stats(out);
  return out;
}

inline std::vector<int> random_permutation(int n, SplitMix64& rng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  return perm;
}

}  // namespace perfsage::testutil
