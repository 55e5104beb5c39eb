#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "perfsage/error.hpp"

namespace perfsage {

// Closed operator vocabulary. The integer value of each member is also its
// category index for feature encoding, so the order is part of the schema.
enum class OpType : int {
  kDense = 0,
  kConv2d,
  kDepthwiseConv2d,
  kAvgPool2d,
  kPad,
  kAdd,
  kMul,
  kPow,
  kTanh,
  kSoftmax,
  kReshape,
  kTranspose,
  kStridedSlice,
  kConcat,
};

inline constexpr int kOpTypeCount = 14;

const char* op_type_name(OpType t);
bool parse_op_type(const std::string& name, OpType* out);

// Hyperparameter keys permitted on a node of the given type. Values for
// present keys must be positive integers; absent keys read as zero.
const std::vector<std::string>& allowed_hyperparams(OpType t);
// Keys that must be present for the type's shape/cost rules to be defined.
const std::vector<std::string>& required_hyperparams(OpType t);

struct OperatorNode {
  int id = 0;
  OpType op_type = OpType::kAdd;
  std::map<std::string, std::int64_t> hyperparams;
  std::vector<std::int64_t> output_shape;  // 1..4 dims, all >= 1

  std::int64_t hyper(const std::string& key, std::int64_t fallback = 0) const {
    auto it = hyperparams.find(key);
    return it == hyperparams.end() ? fallback : it->second;
  }
  std::int64_t output_elems() const {
    std::int64_t n = 1;
    for (auto d : output_shape) n *= d;
    return n;
  }
  bool operator==(const OperatorNode&) const = default;
};

struct GraphMetadata {
  std::int64_t op_count = 0;
  std::int64_t tensor_count = 0;
  std::int64_t param_bytes = 0;
  bool operator==(const GraphMetadata&) const = default;
};

// Directed acyclic operator graph. Node ids are dense 0..n-1 and double as
// row indices downstream; edges are (producer, consumer) pairs. The tensor
// between two nodes is described by the producer's output_shape.
struct ModelGraph {
  std::vector<OperatorNode> nodes;
  std::vector<std::pair<int, int>> edges;
  std::string design_space;
  std::int64_t seed = 0;
  GraphMetadata metadata;

  bool operator==(const ModelGraph&) const = default;
};

struct Violation {
  std::string rule;
  int node_id = -1;  // offending id, or -1 for graph-level rules
  std::string message;
};

struct ValidationReport {
  bool ok = false;
  std::vector<Violation> violations;
  bool has(const std::string& rule) const;
};

// Checks every node- and graph-level invariant and reports all violations.
ValidationReport validate_graph(const ModelGraph& g);

// Kahn's algorithm, ties broken by ascending node id. Throws on cycles.
std::vector<int> topological_order(const ModelGraph& g);

// Undirected 1-hop adjacency as a sorted vector; never contains `id`.
std::vector<int> neighbors(const ModelGraph& g, int id);

// Weight count of a node, assuming one byte per weight (INT8).
std::int64_t node_param_count(const OperatorNode& node);

// op_count, tensor_count (edges plus graph inputs/outputs), param_bytes.
GraphMetadata graph_stats(const ModelGraph& g);

inline constexpr int kGraphSchemaVersion = 1;

// Canonical single-line JSON. parse(serialize(g)) == g field for field.
std::string serialize_graph(const ModelGraph& g);
ModelGraph parse_graph(const std::string& bytes);

}  // namespace perfsage
