#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "perfsage/graph.hpp"

namespace perfsage {

enum class OracleTarget { kCpuLatency, kCpuEnergy, kAccelLatency, kAccelMemory };

const char* oracle_target_name(OracleTarget t);
bool parse_oracle_target(const std::string& name, OracleTarget* out);
const char* oracle_target_unit(OracleTarget t);  // us | uJ | bytes

struct OracleConfig {
  OracleTarget target = OracleTarget::kCpuLatency;
  double throughput_macs_per_us = 500.0;
  double mem_bandwidth_bytes_per_us = 2000.0;
  double per_op_overhead_us = 5.0;
  std::int64_t accel_parallel_lanes = 64;
  std::int64_t accel_tile_elems = 4096;
  double fusion_discount = 0.3;  // in [0, 1)
  double energy_uj_per_mac = 0.002;
  double energy_uj_per_byte = 0.001;
  double noise_sigma = 0.0;  // multiplicative label noise; off by default

  void validate() const;  // throws kInvalidArgument
};

std::string oracle_config_to_json(const OracleConfig& cfg);
OracleConfig oracle_config_from_json(const std::string& text);

// Multiply-accumulate count of a single operator.
std::int64_t op_macs(const OperatorNode& node);

// Additive cost models: strictly a sum of per-node terms.
double cpu_latency(const ModelGraph& g, const OracleConfig& cfg);
double cpu_energy(const ModelGraph& g, const OracleConfig& cfg);

// Parallelism-floored per-node cost with a fusion discount on elementwise
// consumers of convolutions; deliberately not additive over nodes.
double accel_latency(const ModelGraph& g, const OracleConfig& cfg);

// Peak of live tensor bytes (1 byte/element) plus the executing node's
// weight bytes, simulated over the deterministic topological order.
double accel_peak_memory(const ModelGraph& g, const OracleConfig& cfg);

double run_oracle(const ModelGraph& g, const OracleConfig& cfg);

struct LabeledSample {
  ModelGraph graph;
  std::string design_space;
  std::map<std::string, double> labels;  // target name -> value
};

std::vector<LabeledSample> label_dataset(const std::vector<ModelGraph>& graphs,
                                         const std::vector<OracleTarget>& targets,
                                         const std::map<OracleTarget, OracleConfig>& cfg_map);

// JSONL: one object per line {design_space, labels:{...}, graph:{...}}.
// Readers also accept {"graph_ref": "<path>"} resolved against base_dir.
std::string labeled_sample_to_json(const LabeledSample& s);
void write_labeled_jsonl(const std::string& path, const std::vector<LabeledSample>& samples);
std::vector<LabeledSample> read_labeled_jsonl(const std::string& path);

}  // namespace perfsage
