#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "perfsage/graph.hpp"

namespace perfsage {

enum class BlockOp { kInvertedBottleneck, kFusedMbconv, kIdentity };
enum class ScalePreset { kPaper, kDesk };

struct VitOptions {
  std::vector<std::int64_t> embed_dims;
  std::vector<std::int64_t> head_counts;
  std::vector<std::int64_t> qkv_dims;  // per-head query/key/value width
  std::vector<std::int64_t> mlp_ratios_x100;
  std::pair<int, int> depth_range{0, 0};  // inclusive
};

// A parameterized family of architectures. Every categorical listed here is
// drawn uniformly and independently; the expansion of block ops into
// primitive operators is a fixed template (see sampler.cpp).
struct DesignSpaceSpec {
  std::string name;  // cnn_small | cnn_large | cnn_kws | vit
  int block_count = 0;
  int nodes_per_block = 0;
  std::vector<std::int64_t> channel_options;
  std::vector<std::pair<std::int64_t, std::int64_t>> kernel_options;
  std::vector<BlockOp> block_op_options;
  bool residual_optional = false;
  VitOptions vit_options;
  ScalePreset scale_preset = ScalePreset::kDesk;
};

// Built-in spaces at either scale. Throws on unknown names.
DesignSpaceSpec design_space_preset(const std::string& name, ScalePreset preset);

void validate_spec(const DesignSpaceSpec& spec);  // throws kInvalidArgument

std::string spec_to_json(const DesignSpaceSpec& spec);
DesignSpaceSpec spec_from_json(const std::string& text);

// Canonical fingerprint of the spec; part of the sampling seed.
std::uint64_t spec_hash(const DesignSpaceSpec& spec);

// Deterministic draw of one model. The PRNG is SplitMix64 seeded with
// mix64(spec_hash(spec), seed); draws follow a fixed schedule so equal
// (spec, seed) pairs give byte-identical graphs.
ModelGraph sample_model(const DesignSpaceSpec& spec, std::int64_t seed);

// n models from consecutive seeds seed..seed+n-1.
std::vector<ModelGraph> sample_dataset(const DesignSpaceSpec& spec, int n, std::int64_t seed);

const char* block_op_name(BlockOp op);
const char* scale_preset_name(ScalePreset p);

}  // namespace perfsage
