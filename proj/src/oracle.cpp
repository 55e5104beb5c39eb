#include "perfsage/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "perfsage/rng.hpp"

namespace perfsage {

using json = nlohmann::json;

namespace {

const char* kTargetNames[] = {"cpu_latency", "cpu_energy", "accel_latency", "accel_memory"};

bool is_conv_like(OpType t) { return t == OpType::kConv2d || t == OpType::kDepthwiseConv2d; }

bool is_elementwise(OpType t) {
  return t == OpType::kAdd || t == OpType::kMul || t == OpType::kPow || t == OpType::kTanh;
}

// Bytes moved by one node at INT8: inputs + outputs + weights, one byte per
// element. Source nodes read the graph input, modeled by their own output
// element count.
std::int64_t moved_bytes(const ModelGraph& g, const std::vector<std::int64_t>& in_elems, int i) {
  const OperatorNode& node = g.nodes[i];
  std::int64_t in = in_elems[i] > 0 ? in_elems[i] : node.output_elems();
  return in + node.output_elems() + node_param_count(node);
}

std::vector<std::int64_t> input_elems_per_node(const ModelGraph& g) {
  std::vector<std::int64_t> in(g.nodes.size(), 0);
  for (const auto& [p, c] : g.edges) in[c] += g.nodes[p].output_elems();
  return in;
}

double apply_noise(double value, const ModelGraph& g, const OracleConfig& cfg) {
  if (cfg.noise_sigma <= 0.0) return value;
  SplitMix64 rng(mix64(fnv1a(serialize_graph(g)), static_cast<std::uint64_t>(cfg.target)));
  return value * (1.0 - cfg.noise_sigma + 2.0 * cfg.noise_sigma * rng.uniform_real());
}

}  // namespace

const char* oracle_target_name(OracleTarget t) { return kTargetNames[static_cast<int>(t)]; }

bool parse_oracle_target(const std::string& name, OracleTarget* out) {
  for (int i = 0; i < 4; ++i) {
    if (name == kTargetNames[i]) {
      *out = static_cast<OracleTarget>(i);
      return true;
    }
  }
  return false;
}

const char* oracle_target_unit(OracleTarget t) {
  switch (t) {
    case OracleTarget::kCpuLatency:
    case OracleTarget::kAccelLatency: return "us";
    case OracleTarget::kCpuEnergy: return "uJ";
    case OracleTarget::kAccelMemory: return "bytes";
  }
  return "?";
}

void OracleConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "oracle config: " + m); };
  if (throughput_macs_per_us <= 0 || mem_bandwidth_bytes_per_us <= 0) fail("rates must be positive");
  if (per_op_overhead_us < 0) fail("per_op_overhead_us must be >= 0");
  if (accel_parallel_lanes < 1 || accel_tile_elems < 1) fail("accelerator dims must be >= 1");
  if (fusion_discount < 0 || fusion_discount >= 1) fail("fusion_discount must be in [0, 1)");
  if (energy_uj_per_mac <= 0 || energy_uj_per_byte <= 0) fail("energy rates must be positive");
  if (noise_sigma < 0 || noise_sigma >= 1) fail("noise_sigma must be in [0, 1)");
}

std::string oracle_config_to_json(const OracleConfig& cfg) {
  json doc = {{"target", oracle_target_name(cfg.target)},
              {"throughput_macs_per_us", cfg.throughput_macs_per_us},
              {"mem_bandwidth_bytes_per_us", cfg.mem_bandwidth_bytes_per_us},
              {"per_op_overhead_us", cfg.per_op_overhead_us},
              {"accel_parallel_lanes", cfg.accel_parallel_lanes},
              {"accel_tile_elems", cfg.accel_tile_elems},
              {"fusion_discount", cfg.fusion_discount},
              {"energy_uj_per_mac", cfg.energy_uj_per_mac},
              {"energy_uj_per_byte", cfg.energy_uj_per_byte},
              {"noise_sigma", cfg.noise_sigma}};
  return doc.dump();
}

OracleConfig oracle_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("oracle config: ") + e.what());
  }
  OracleConfig cfg;
  try {
    if (doc.contains("target")) {
      std::string t = doc["target"].get<std::string>();
      if (!parse_oracle_target(t, &cfg.target))
        throw Error(ErrorCode::kMalformedInput, "unknown oracle target '" + t + "'");
    }
    auto get = [&doc](const char* key, auto& field) {
      if (doc.contains(key)) field = doc[key].get<std::remove_reference_t<decltype(field)>>();
    };
    get("throughput_macs_per_us", cfg.throughput_macs_per_us);
    get("mem_bandwidth_bytes_per_us", cfg.mem_bandwidth_bytes_per_us);
    get("per_op_overhead_us", cfg.per_op_overhead_us);
    get("accel_parallel_lanes", cfg.accel_parallel_lanes);
    get("accel_tile_elems", cfg.accel_tile_elems);
    get("fusion_discount", cfg.fusion_discount);
    get("energy_uj_per_mac", cfg.energy_uj_per_mac);
    get("energy_uj_per_byte", cfg.energy_uj_per_byte);
    get("noise_sigma", cfg.noise_sigma);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("oracle config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::int64_t op_macs(const OperatorNode& node) {
  switch (node.op_type) {
    case OpType::kConv2d:
      return node.output_elems() * node.hyper("kernel_h") * node.hyper("kernel_w") *
             node.hyper("in_channels");
    case OpType::kDepthwiseConv2d:
      return node.output_elems() * node.hyper("kernel_h") * node.hyper("kernel_w");
    case OpType::kDense:
      return node.hyper("in_channels") * node.hyper("out_channels");
    case OpType::kAvgPool2d:
      return node.output_elems() * node.hyper("kernel_h") * node.hyper("kernel_w");
    default:  // elementwise and shape ops
      return node.output_elems();
  }
}

double cpu_latency(const ModelGraph& g, const OracleConfig& cfg) {
  auto in_elems = input_elems_per_node(g);
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    total += static_cast<double>(op_macs(g.nodes[i])) / cfg.throughput_macs_per_us +
             static_cast<double>(moved_bytes(g, in_elems, i)) / cfg.mem_bandwidth_bytes_per_us +
             cfg.per_op_overhead_us;
  }
  return apply_noise(total, g, cfg);
}

double cpu_energy(const ModelGraph& g, const OracleConfig& cfg) {
  auto in_elems = input_elems_per_node(g);
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    total += static_cast<double>(op_macs(g.nodes[i])) * cfg.energy_uj_per_mac +
             static_cast<double>(moved_bytes(g, in_elems, i)) * cfg.energy_uj_per_byte;
  }
  return apply_noise(total, g, cfg);
}

double accel_latency(const ModelGraph& g, const OracleConfig& cfg) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<double> cost(n);
  for (int i = 0; i < n; ++i) {
    const OperatorNode& node = g.nodes[i];
    double compute = static_cast<double>(op_macs(node)) /
                     (cfg.throughput_macs_per_us * static_cast<double>(cfg.accel_parallel_lanes));
    double tiles = static_cast<double>((node.output_elems() + cfg.accel_tile_elems - 1) /
                                       cfg.accel_tile_elems);
    cost[i] = std::max(compute, tiles * cfg.per_op_overhead_us);
  }
  // fusion pass: elementwise consumers of a convolution run discounted
  std::vector<char> fused(n, 0);
  for (const auto& [p, c] : g.edges) {
    if (is_conv_like(g.nodes[p].op_type) && is_elementwise(g.nodes[c].op_type)) fused[c] = 1;
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += fused[i] ? cost[i] * (1.0 - cfg.fusion_discount) : cost[i];
  return apply_noise(total, g, cfg);
}

double accel_peak_memory(const ModelGraph& g, const OracleConfig& cfg) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> order = topological_order(g);
  std::vector<int> pos(n);
  for (int t = 0; t < n; ++t) pos[order[t]] = t;
  // a tensor is live from its producer's step through its last consumer's
  std::vector<int> death(n);
  for (int i = 0; i < n; ++i) death[i] = pos[i];
  for (const auto& [p, c] : g.edges) death[p] = std::max(death[p], pos[c]);
  std::vector<std::vector<int>> dies_at(n);
  for (int i = 0; i < n; ++i) dies_at[death[i]].push_back(i);

  std::int64_t live = 0, peak = 0;
  for (int t = 0; t < n; ++t) {
    const OperatorNode& node = g.nodes[order[t]];
    live += node.output_elems();
    peak = std::max(peak, live + node_param_count(node));
    for (int u : dies_at[t]) live -= g.nodes[u].output_elems();
  }
  return apply_noise(static_cast<double>(peak), g, cfg);
}

double run_oracle(const ModelGraph& g, const OracleConfig& cfg) {
  switch (cfg.target) {
    case OracleTarget::kCpuLatency: return cpu_latency(g, cfg);
    case OracleTarget::kCpuEnergy: return cpu_energy(g, cfg);
    case OracleTarget::kAccelLatency: return accel_latency(g, cfg);
    case OracleTarget::kAccelMemory: return accel_peak_memory(g, cfg);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown oracle target");
}

std::vector<LabeledSample> label_dataset(const std::vector<ModelGraph>& graphs,
                                         const std::vector<OracleTarget>& targets,
                                         const std::map<OracleTarget, OracleConfig>& cfg_map) {
  std::vector<LabeledSample> out;
  out.reserve(graphs.size());
  for (const ModelGraph& g : graphs) {
    LabeledSample s;
    s.graph = g;
    s.design_space = g.design_space;
    for (OracleTarget t : targets) {
      OracleConfig cfg;
      if (auto it = cfg_map.find(t); it != cfg_map.end()) cfg = it->second;
      cfg.target = t;
      cfg.validate();
      s.labels[oracle_target_name(t)] = run_oracle(g, cfg);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string labeled_sample_to_json(const LabeledSample& s) {
  json labels = json::object();
  for (const auto& [k, v] : s.labels) labels[k] = v;
  json doc = {{"design_space", s.design_space},
              {"graph", json::parse(serialize_graph(s.graph))},
              {"labels", labels}};
  return doc.dump();
}

void write_labeled_jsonl(const std::string& path, const std::vector<LabeledSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMalformedInput, "cannot open '" + path + "' for writing");
  for (const auto& s : samples) out << labeled_sample_to_json(s) << "\n";
}

std::vector<LabeledSample> read_labeled_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMalformedInput, "cannot open '" + path + "'");
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<LabeledSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedInput,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    LabeledSample s;
    try {
      s.design_space = doc.at("design_space").get<std::string>();
      if (doc.contains("graph_ref")) {
        std::filesystem::path ref = base / doc["graph_ref"].get<std::string>();
        std::ifstream gf(ref, std::ios::binary);
        if (!gf) throw Error(ErrorCode::kMalformedInput, "cannot open graph_ref '" + ref.string() + "'");
        std::string bytes((std::istreambuf_iterator<char>(gf)), std::istreambuf_iterator<char>());
        s.graph = parse_graph(bytes);
      } else {
        s.graph = parse_graph(doc.at("graph").dump());
      }
      for (const auto& [k, v] : doc.at("labels").items()) s.labels[k] = v.get<double>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedInput,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace perfsage
