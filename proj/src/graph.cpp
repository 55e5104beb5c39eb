#include "perfsage/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "json.hpp"

namespace perfsage {

using json = nlohmann::json;

namespace {

const char* kOpNames[kOpTypeCount] = {
    "DENSE",   "CONV_2D", "DEPTHWISE_CONV_2D", "AVG_POOL_2D", "PAD",
    "ADD",     "MUL",     "POW",               "TANH",        "SOFTMAX",
    "RESHAPE", "TRANSPOSE", "STRIDED_SLICE",   "CONCAT",
};

const std::vector<std::string> kNoKeys;
const std::vector<std::string> kConvKeys = {"kernel_h", "kernel_w", "stride_h", "stride_w",
                                            "padding",  "in_channels", "out_channels"};
const std::vector<std::string> kDwKeys = {"kernel_h", "kernel_w", "stride_h", "stride_w",
                                          "padding",  "in_channels", "depth_multiplier"};
const std::vector<std::string> kDenseKeys = {"in_channels", "out_channels", "embed_dim",
                                             "num_heads", "mlp_ratio_x100"};
const std::vector<std::string> kPoolKeys = {"kernel_h", "kernel_w", "stride_h", "stride_w",
                                            "padding"};
const std::vector<std::string> kPadKeys = {"padding"};
const std::vector<std::string> kSoftmaxKeys = {"num_heads"};

const std::vector<std::string> kConvRequired = {"kernel_h", "kernel_w", "stride_h", "stride_w",
                                                "in_channels", "out_channels"};
const std::vector<std::string> kDwRequired = {"kernel_h", "kernel_w", "stride_h", "stride_w",
                                              "in_channels", "depth_multiplier"};
const std::vector<std::string> kDenseRequired = {"in_channels", "out_channels"};
const std::vector<std::string> kPoolRequired = {"kernel_h", "kernel_w", "stride_h", "stride_w"};

}  // namespace

const char* op_type_name(OpType t) { return kOpNames[static_cast<int>(t)]; }

bool parse_op_type(const std::string& name, OpType* out) {
  for (int i = 0; i < kOpTypeCount; ++i) {
    if (name == kOpNames[i]) {
      *out = static_cast<OpType>(i);
      return true;
    }
  }
  return false;
}

const std::vector<std::string>& allowed_hyperparams(OpType t) {
  switch (t) {
    case OpType::kConv2d: return kConvKeys;
    case OpType::kDepthwiseConv2d: return kDwKeys;
    case OpType::kDense: return kDenseKeys;
    case OpType::kAvgPool2d: return kPoolKeys;
    case OpType::kPad: return kPadKeys;
    case OpType::kSoftmax: return kSoftmaxKeys;
    default: return kNoKeys;
  }
}

const std::vector<std::string>& required_hyperparams(OpType t) {
  switch (t) {
    case OpType::kConv2d: return kConvRequired;
    case OpType::kDepthwiseConv2d: return kDwRequired;
    case OpType::kDense: return kDenseRequired;
    case OpType::kAvgPool2d: return kPoolRequired;
    case OpType::kPad: return kPadKeys;
    default: return kNoKeys;
  }
}

bool ValidationReport::has(const std::string& rule) const {
  for (const auto& v : violations)
    if (v.rule == rule) return true;
  return false;
}

ValidationReport validate_graph(const ModelGraph& g) {
  ValidationReport rep;
  auto flag = [&rep](const std::string& rule, int id, std::string msg) {
    rep.violations.push_back({rule, id, std::move(msg)});
  };

  const int n = static_cast<int>(g.nodes.size());
  if (n == 0) flag("empty", -1, "graph has no nodes");

  for (int i = 0; i < n; ++i) {
    const OperatorNode& node = g.nodes[i];
    if (node.id != i)
      flag("node-id", node.id, "node ids must be dense 0..n-1 in order");
    int t = static_cast<int>(node.op_type);
    if (t < 0 || t >= kOpTypeCount) {
      flag("op-type", node.id, "op_type outside the enumeration");
      continue;
    }
    const auto& allowed = allowed_hyperparams(node.op_type);
    for (const auto& [key, value] : node.hyperparams) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        flag("hyperparam-key", node.id, "key '" + key + "' not defined for " + op_type_name(node.op_type));
      if (value < 1)
        flag("hyperparam-value", node.id, "key '" + key + "' must be a positive integer");
    }
    for (const auto& key : required_hyperparams(node.op_type)) {
      if (!node.hyperparams.count(key))
        flag("hyperparam-missing", node.id, "key '" + key + "' required for " + op_type_name(node.op_type));
    }
    if (node.output_shape.empty() || node.output_shape.size() > 4)
      flag("output-shape", node.id, "output_shape must have 1-4 entries");
    for (auto d : node.output_shape)
      if (d < 1) flag("output-shape", node.id, "output dimensions must be >= 1");
  }

  bool endpoints_ok = true;
  std::set<std::pair<int, int>> seen;
  for (const auto& [p, c] : g.edges) {
    if (p < 0 || p >= n || c < 0 || c >= n) {
      flag("edge-endpoint", p, "edge references a nonexistent node");
      endpoints_ok = false;
      continue;
    }
    if (p == c) flag("self-edge", p, "self-edge");
    if (!seen.insert({p, c}).second) flag("duplicate-edge", p, "duplicate edge");
  }

  if (endpoints_ok && n > 0) {
    // Cycle check: Kahn without tie-breaking, counting processed nodes.
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> out(n);
    for (const auto& [p, c] : g.edges) {
      if (p == c) continue;
      ++indeg[c];
      out[p].push_back(c);
    }
    std::queue<int> q;
    for (int i = 0; i < n; ++i)
      if (indeg[i] == 0) q.push(i);
    int processed = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      ++processed;
      for (int v : out[u])
        if (--indeg[v] == 0) q.push(v);
    }
    if (processed != n) flag("cycle", -1, "graph contains a directed cycle");

    // Weak connectivity over the undirected view.
    std::vector<std::vector<int>> und(n);
    for (const auto& [p, c] : g.edges) {
      if (p == c) continue;
      und[p].push_back(c);
      und[c].push_back(p);
    }
    std::vector<char> vis(n, 0);
    std::queue<int> bfs;
    bfs.push(0);
    vis[0] = 1;
    int reached = 1;
    while (!bfs.empty()) {
      int u = bfs.front();
      bfs.pop();
      for (int v : und[u])
        if (!vis[v]) {
          vis[v] = 1;
          ++reached;
          bfs.push(v);
        }
    }
    if (reached != n) flag("connectivity", -1, "graph is not weakly connected");
  }

  if (g.metadata != graph_stats(g))
    flag("metadata", -1, "metadata counts do not match recomputed values");

  rep.ok = rep.violations.empty();
  return rep;
}

std::vector<int> topological_order(const ModelGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const auto& [p, c] : g.edges) {
    if (p < 0 || p >= n || c < 0 || c >= n)
      throw Error(ErrorCode::kInvalidArgument, "edge endpoint out of range");
    ++indeg[c];
    out[p].push_back(c);
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(i);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int v : out[u])
      if (--indeg[v] == 0) ready.push(v);
  }
  if (static_cast<int>(order.size()) != n)
    throw Error(ErrorCode::kInvalidArgument, "cannot order a cyclic graph");
  return order;
}

std::vector<int> neighbors(const ModelGraph& g, int id) {
  if (id < 0 || id >= static_cast<int>(g.nodes.size()))
    throw Error(ErrorCode::kInvalidArgument, "unknown node id " + std::to_string(id));
  std::set<int> nb;
  for (const auto& [p, c] : g.edges) {
    if (p == id && c != id) nb.insert(c);
    if (c == id && p != id) nb.insert(p);
  }
  return {nb.begin(), nb.end()};
}

std::int64_t node_param_count(const OperatorNode& node) {
  switch (node.op_type) {
    case OpType::kConv2d: {
      std::int64_t k = node.hyper("kernel_h") * node.hyper("kernel_w");
      return k * node.hyper("in_channels") * node.hyper("out_channels") + node.hyper("out_channels");
    }
    case OpType::kDepthwiseConv2d: {
      std::int64_t k = node.hyper("kernel_h") * node.hyper("kernel_w");
      std::int64_t ch = node.hyper("in_channels") * node.hyper("depth_multiplier");
      return k * ch + ch;
    }
    case OpType::kDense:
      return node.hyper("in_channels") * node.hyper("out_channels") + node.hyper("out_channels");
    default:
      return 0;
  }
}

GraphMetadata graph_stats(const ModelGraph& g) {
  GraphMetadata m;
  m.op_count = static_cast<std::int64_t>(g.nodes.size());
  const int n = static_cast<int>(g.nodes.size());
  std::vector<char> has_in(n, 0), has_out(n, 0);
  for (const auto& [p, c] : g.edges) {
    if (p >= 0 && p < n) has_out[p] = 1;
    if (c >= 0 && c < n) has_in[c] = 1;
  }
  std::int64_t io = 0;
  for (int i = 0; i < n; ++i) io += (!has_in[i]) + (!has_out[i]);
  m.tensor_count = static_cast<std::int64_t>(g.edges.size()) + io;
  for (const auto& node : g.nodes) m.param_bytes += node_param_count(node);
  return m;
}

std::string serialize_graph(const ModelGraph& g) {
  json nodes = json::array();
  for (const auto& node : g.nodes) {
    json hp = json::object();
    for (const auto& [k, v] : node.hyperparams) hp[k] = v;
    nodes.push_back({{"id", node.id},
                     {"op_type", op_type_name(node.op_type)},
                     {"hyperparams", hp},
                     {"output_shape", node.output_shape}});
  }
  json edges = json::array();
  for (const auto& [p, c] : g.edges) edges.push_back(json::array({p, c}));
  json doc = {{"schema_version", kGraphSchemaVersion},
              {"design_space", g.design_space},
              {"seed", g.seed},
              {"nodes", nodes},
              {"edges", edges}};
  return doc.dump();
}

namespace {

std::int64_t require_int(const json& j, const char* what) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw Error(ErrorCode::kMalformedInput, std::string("expected integer for ") + what);
  return j.get<std::int64_t>();
}

}  // namespace

ModelGraph parse_graph(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("graph document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema_version"))
    throw Error(ErrorCode::kMalformedInput, "graph document: missing schema_version");
  if (require_int(doc["schema_version"], "schema_version") != kGraphSchemaVersion)
    throw Error(ErrorCode::kVersionMismatch,
                "graph schema_version " + doc["schema_version"].dump() + " not supported");
  ModelGraph g;
  try {
    g.design_space = doc.at("design_space").get<std::string>();
    g.seed = require_int(doc.at("seed"), "seed");
    for (const auto& jn : doc.at("nodes")) {
      OperatorNode node;
      node.id = static_cast<int>(require_int(jn.at("id"), "node id"));
      std::string name = jn.at("op_type").get<std::string>();
      if (!parse_op_type(name, &node.op_type))
        throw Error(ErrorCode::kUnknownOp, "unknown op_type '" + name + "'");
      for (const auto& [k, v] : jn.at("hyperparams").items())
        node.hyperparams[k] = require_int(v, k.c_str());
      for (const auto& d : jn.at("output_shape"))
        node.output_shape.push_back(require_int(d, "output_shape"));
      g.nodes.push_back(std::move(node));
    }
    for (const auto& je : doc.at("edges")) {
      if (!je.is_array() || je.size() != 2)
        throw Error(ErrorCode::kMalformedInput, "edge must be a [producer, consumer] pair");
      g.edges.emplace_back(static_cast<int>(require_int(je[0], "edge")),
                           static_cast<int>(require_int(je[1], "edge")));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("graph document: ") + e.what());
  }
  g.metadata = graph_stats(g);
  return g;
}

}  // namespace perfsage
