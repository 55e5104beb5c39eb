#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "perfsage/sampler.hpp"
#include "test_util.hpp"

using namespace perfsage;

namespace {

std::set<OpType> ops_used(const ModelGraph& g) {
  std::set<OpType> used;
  for (const auto& n : g.nodes) used.insert(n.op_type);
  return used;
}

const std::set<OpType> kCnnOps = {OpType::kConv2d, OpType::kDepthwiseConv2d, OpType::kAvgPool2d,
                                  OpType::kPad, OpType::kAdd, OpType::kReshape};
const std::set<OpType> kVitOps = {OpType::kDense,   OpType::kAdd,       OpType::kMul,
                                  OpType::kPow,     OpType::kTanh,      OpType::kSoftmax,
                                  OpType::kReshape, OpType::kTranspose, OpType::kStridedSlice,
                                  OpType::kConcat};

}  // namespace

TEST_CASE("identical (spec, seed) gives byte-identical graphs") {
  DesignSpaceSpec spec = design_space_preset("cnn_large", ScalePreset::kDesk);
  CHECK(serialize_graph(sample_model(spec, 11)) == serialize_graph(sample_model(spec, 11)));
  auto a = sample_dataset(spec, 5, 100);
  auto b = sample_dataset(spec, 5, 100);
  for (int i = 0; i < 5; ++i) CHECK(serialize_graph(a[i]) == serialize_graph(b[i]));
}

TEST_CASE("overlapping seed ranges overlap exactly") {
  DesignSpaceSpec spec = design_space_preset("cnn_kws", ScalePreset::kDesk);
  auto a = sample_dataset(spec, 4, 10);  // seeds 10..13
  auto b = sample_dataset(spec, 4, 12);  // seeds 12..15
  CHECK(serialize_graph(a[2]) == serialize_graph(b[0]));
  CHECK(serialize_graph(a[3]) == serialize_graph(b[1]));
}

TEST_CASE("desk cnn_small: validity, op-count range, operator conformance, coverage") {
  DesignSpaceSpec spec = design_space_preset("cnn_small", ScalePreset::kDesk);
  std::set<std::int64_t> op_counts;
  std::set<std::int64_t> channels_seen;
  std::set<std::pair<std::int64_t, std::int64_t>> kernels_seen;
  bool saw_add = false, saw_no_add = false, saw_identity_gap = false;
  for (int seed = 0; seed < 1000; ++seed) {
    ModelGraph g = sample_model(spec, seed);
    ValidationReport rep = validate_graph(g);
    if (!rep.ok) {
      for (const auto& v : rep.violations) MESSAGE(v.rule, ": ", v.message);
    }
    REQUIRE(rep.ok);
    op_counts.insert(g.metadata.op_count);
    CHECK(g.metadata.op_count >= 13);
    CHECK(g.metadata.op_count <= 70);
    bool has_add = false;
    for (const auto& n : g.nodes) {
      CHECK(kCnnOps.count(n.op_type));
      if (n.op_type == OpType::kConv2d && n.hyper("kernel_h") == 1)
        channels_seen.insert(n.hyper("out_channels"));
      if (n.op_type == OpType::kDepthwiseConv2d || (n.op_type == OpType::kConv2d && n.hyper("kernel_h") > 1))
        kernels_seen.insert({n.hyper("kernel_h"), n.hyper("kernel_w")});
      if (n.op_type == OpType::kAdd) has_add = true;
    }
    (has_add ? saw_add : saw_no_add) = true;
    // identity draws shrink the graph below the all-op maximum
    if (g.metadata.op_count < 20) saw_identity_gap = true;
  }
  CHECK(op_counts.size() >= 2);
  for (auto c : spec.channel_options) CHECK(channels_seen.count(c));
  for (auto k : spec.kernel_options) CHECK(kernels_seen.count(k));
  CHECK(saw_add);
  CHECK(saw_no_add);
  CHECK(saw_identity_gap);
}

TEST_CASE("desk vit: softmax and dense everywhere, no convolutions") {
  DesignSpaceSpec spec = design_space_preset("vit", ScalePreset::kDesk);
  for (int seed = 0; seed < 100; ++seed) {
    ModelGraph g = sample_model(spec, seed);
    REQUIRE(validate_graph(g).ok);
    auto used = ops_used(g);
    CHECK(used.count(OpType::kSoftmax));
    CHECK(used.count(OpType::kDense));
    CHECK_FALSE(used.count(OpType::kConv2d));
    for (const auto& n : g.nodes) CHECK(kVitOps.count(n.op_type));
  }
}

TEST_CASE("kws space has non-square kernels and no pads or adds") {
  DesignSpaceSpec spec = design_space_preset("cnn_kws", ScalePreset::kPaper);
  bool non_square = false;
  for (auto [kh, kw] : spec.kernel_options) non_square |= kh != kw;
  CHECK(non_square);
  for (int seed = 0; seed < 50; ++seed) {
    ModelGraph g = sample_model(design_space_preset("cnn_kws", ScalePreset::kDesk), seed);
    REQUIRE(validate_graph(g).ok);
    auto used = ops_used(g);
    CHECK_FALSE(used.count(OpType::kPad));
    CHECK_FALSE(used.count(OpType::kAdd));
  }
}

TEST_CASE("paper presets carry the documented dimensions") {
  DesignSpaceSpec large = design_space_preset("cnn_large", ScalePreset::kPaper);
  CHECK(large.block_count == 6);
  CHECK(large.nodes_per_block == 5);
  CHECK(large.channel_options.size() == 6);
  CHECK(large.kernel_options == std::vector<std::pair<std::int64_t, std::int64_t>>{{3, 3}, {5, 5}});

  DesignSpaceSpec small = design_space_preset("cnn_small", ScalePreset::kPaper);
  CHECK(small.block_count == 3);
  REQUIRE(small.channel_options.size() == large.channel_options.size());
  for (size_t i = 0; i < small.channel_options.size(); ++i)
    CHECK(small.channel_options[i] * 3 == large.channel_options[i]);

  DesignSpaceSpec vit = design_space_preset("vit", ScalePreset::kPaper);
  CHECK_FALSE(vit.vit_options.embed_dims.empty());
  CHECK_FALSE(vit.vit_options.head_counts.empty());
  CHECK_FALSE(vit.vit_options.qkv_dims.empty());
  CHECK_FALSE(vit.vit_options.mlp_ratios_x100.empty());
  CHECK(vit.vit_options.depth_range.second > vit.vit_options.depth_range.first);
}

TEST_CASE("degenerate single-option space collapses to one architecture") {
  DesignSpaceSpec spec = design_space_preset("cnn_small", ScalePreset::kDesk);
  spec.channel_options = {16};
  spec.kernel_options = {{3, 3}};
  spec.block_op_options = {BlockOp::kInvertedBottleneck};
  spec.residual_optional = false;
  ModelGraph first = sample_model(spec, 0);
  for (int seed = 1; seed < 5; ++seed) {
    ModelGraph g = sample_model(spec, seed);
    CHECK(g.nodes == first.nodes);
    CHECK(g.edges == first.edges);
  }
}

TEST_CASE("vit paper sample stays within its operator column") {
  DesignSpaceSpec spec = design_space_preset("vit", ScalePreset::kPaper);
  ModelGraph g = sample_model(spec, 5);
  REQUIRE(validate_graph(g).ok);
  for (const auto& n : g.nodes) CHECK(kVitOps.count(n.op_type));
}

TEST_CASE("spec json round trip preserves sampling") {
  DesignSpaceSpec spec = design_space_preset("vit", ScalePreset::kDesk);
  DesignSpaceSpec back = spec_from_json(spec_to_json(spec));
  CHECK(spec_hash(back) == spec_hash(spec));
  CHECK(serialize_graph(sample_model(back, 3)) == serialize_graph(sample_model(spec, 3)));
}

TEST_CASE("shape propagation: convolution chains stay consistent") {
  DesignSpaceSpec spec = design_space_preset("cnn_large", ScalePreset::kDesk);
  for (int seed = 0; seed < 20; ++seed) {
    ModelGraph g = sample_model(spec, seed);
    std::vector<std::vector<int>> preds(g.nodes.size());
    for (const auto& [p, c] : g.edges) preds[c].push_back(p);
    for (const auto& n : g.nodes) {
      if (n.op_type != OpType::kConv2d || preds[n.id].empty()) continue;
      const auto& in_shape = g.nodes[preds[n.id][0]].output_shape;
      REQUIRE(in_shape.size() == 3);
      CHECK(in_shape[2] == n.hyper("in_channels"));
      if (n.hyper("padding") == 1) {  // SAME
        std::int64_t eh = (in_shape[0] + n.hyper("stride_h") - 1) / n.hyper("stride_h");
        CHECK(n.output_shape[0] == eh);
      }
    }
  }
}
