#include "perfsage/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "perfsage/rng.hpp"

namespace perfsage {

using json = nlohmann::json;

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Fixed template constants per space; these are not sampled.
struct TemplateParams {
  std::int64_t input_h = 0, input_w = 0, input_ch = 0;
  std::int64_t classes = 0;
  std::int64_t expand_ratio = 1;      // bottleneck expansion inside block nodes
  bool explicit_pad = false;          // PAD op before k>3 spatial convolutions
  std::pair<std::int64_t, std::int64_t> stem_kernel{3, 3};
  // vit only
  std::int64_t grid_h = 0, grid_w = 0, patch_dim = 0;
};

TemplateParams template_params(const DesignSpaceSpec& spec) {
  const bool paper = spec.scale_preset == ScalePreset::kPaper;
  TemplateParams tp;
  if (spec.name == "cnn_small") {
    tp = {32, 32, 3, 10, paper ? 4 : 2, true, {3, 3}};
  } else if (spec.name == "cnn_large") {
    tp = {paper ? 224 : 32, paper ? 224 : 32, 3, paper ? 1000 : 100, paper ? 4 : 2, true, {3, 3}};
  } else if (spec.name == "cnn_kws") {
    tp = {49, 10, 1, 12, 1, false, {10, 4}};
  } else if (spec.name == "vit") {
    tp.classes = 100;
    tp.grid_h = tp.grid_w = paper ? 8 : 4;   // 32x32x3 image, patch 4 or 8
    tp.patch_dim = (32 / tp.grid_h) * (32 / tp.grid_w) * 3;
  }
  return tp;
}

struct GraphBuilder {
  ModelGraph g;

  int add(OpType t, std::map<std::string, std::int64_t> hp, std::vector<std::int64_t> shape,
          std::initializer_list<int> inputs) {
    int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({id, t, std::move(hp), std::move(shape)});
    for (int p : inputs) g.edges.emplace_back(p, id);
    return id;
  }
};

// Emits the primitive expansion of one block node. Convolutions use SAME
// padding (padding=1 flag, out = ceil(in/stride)) unless an explicit PAD op
// is emitted, in which case the convolution runs VALID on the padded input.
struct CnnState {
  int node = -1;  // current output node
  std::int64_t h = 0, w = 0, ch = 0;
};

void emit_block_node(GraphBuilder& b, CnnState& st, BlockOp op, std::int64_t out_ch,
                     std::int64_t kh, std::int64_t kw, std::int64_t stride, bool residual,
                     std::int64_t expand, bool explicit_pad) {
  const int block_input = st.node;
  const std::int64_t in_ch = st.ch;
  std::int64_t c = in_ch;
  int x = st.node;
  std::int64_t h = st.h, w = st.w;

  auto spatial_conv = [&](OpType t, std::int64_t conv_out) {
    bool pad_node = explicit_pad && (kh > 3 || kw > 3);
    if (pad_node) {
      std::int64_t p = (std::max(kh, kw) - 1) / 2;
      x = b.add(OpType::kPad, {{"padding", p}}, {h + 2 * p, w + 2 * p, c}, {x});
      h += 2 * p;
      w += 2 * p;
    }
    std::map<std::string, std::int64_t> hp = {{"kernel_h", kh},   {"kernel_w", kw},
                                              {"stride_h", stride}, {"stride_w", stride}};
    std::int64_t oh, ow;
    if (pad_node) {  // VALID on the padded input; equals SAME for odd kernels
      oh = (h - kh) / stride + 1;
      ow = (w - kw) / stride + 1;
    } else {
      hp["padding"] = 1;  // SAME
      oh = ceil_div(h, stride);
      ow = ceil_div(w, stride);
    }
    if (t == OpType::kConv2d) {
      hp["in_channels"] = c;
      hp["out_channels"] = conv_out;
    } else {
      hp["in_channels"] = c;
      hp["depth_multiplier"] = 1;
      conv_out = c;
    }
    x = b.add(t, std::move(hp), {oh, ow, conv_out}, {x});
    h = oh;
    w = ow;
    c = conv_out;
  };

  if (op == BlockOp::kInvertedBottleneck) {
    if (expand > 1) {
      std::int64_t e = in_ch * expand;
      x = b.add(OpType::kConv2d,
                {{"kernel_h", 1}, {"kernel_w", 1}, {"stride_h", 1}, {"stride_w", 1},
                 {"in_channels", in_ch}, {"out_channels", e}},
                {h, w, e}, {x});
      c = e;
    }
    spatial_conv(OpType::kDepthwiseConv2d, 0);
  } else {  // fused: the spatial convolution does the expansion
    spatial_conv(OpType::kConv2d, in_ch * expand);
  }
  // pointwise projection
  x = b.add(OpType::kConv2d,
            {{"kernel_h", 1}, {"kernel_w", 1}, {"stride_h", 1}, {"stride_w", 1},
             {"in_channels", c}, {"out_channels", out_ch}},
            {h, w, out_ch}, {x});
  if (residual && stride == 1 && out_ch == in_ch)
    x = b.add(OpType::kAdd, {}, {h, w, out_ch}, {block_input, x});

  st.node = x;
  st.h = h;
  st.w = w;
  st.ch = out_ch;
}

// Draw schedule: stem channels; then per block [residual?], per node
// [op (non-lead nodes only), kernel, channels]. Kernel and channel draws are
// consumed even when the op draw lands on identity, keeping the schedule
// fixed. The stride-2 lead node of each block is always an inverted
// bottleneck; op choice applies to the remaining in-block nodes.
ModelGraph sample_cnn(const DesignSpaceSpec& spec, const TemplateParams& tp, SplitMix64& rng) {
  GraphBuilder b;
  auto draw_ch = [&] { return spec.channel_options[rng.uniform_index(spec.channel_options.size())]; };
  auto draw_kernel = [&] { return spec.kernel_options[rng.uniform_index(spec.kernel_options.size())]; };

  CnnState st;
  std::int64_t stem_ch = draw_ch();
  st.h = ceil_div(tp.input_h, 2);
  st.w = ceil_div(tp.input_w, 2);
  st.ch = stem_ch;
  st.node = b.add(OpType::kConv2d,
                  {{"kernel_h", tp.stem_kernel.first}, {"kernel_w", tp.stem_kernel.second},
                   {"stride_h", 2}, {"stride_w", 2}, {"padding", 1},
                   {"in_channels", tp.input_ch}, {"out_channels", stem_ch}},
                  {st.h, st.w, stem_ch}, {});

  for (int block = 0; block < spec.block_count; ++block) {
    bool residual = spec.residual_optional && rng.uniform_index(2) == 1;
    for (int j = 0; j < spec.nodes_per_block; ++j) {
      BlockOp op = j == 0 ? BlockOp::kInvertedBottleneck
                          : spec.block_op_options[rng.uniform_index(spec.block_op_options.size())];
      auto [kh, kw] = draw_kernel();
      std::int64_t out_ch = draw_ch();
      if (op == BlockOp::kIdentity) continue;
      emit_block_node(b, st, op, out_ch, kh, kw, j == 0 ? 2 : 1, residual, tp.expand_ratio,
                      tp.explicit_pad);
    }
  }

  int pool = b.add(OpType::kAvgPool2d,
                   {{"kernel_h", st.h}, {"kernel_w", st.w}, {"stride_h", 1}, {"stride_w", 1}},
                   {1, 1, st.ch}, {st.node});
  int logits = b.add(OpType::kConv2d,
                     {{"kernel_h", 1}, {"kernel_w", 1}, {"stride_h", 1}, {"stride_w", 1},
                      {"in_channels", st.ch}, {"out_channels", tp.classes}},
                     {1, 1, tp.classes}, {pool});
  b.add(OpType::kReshape, {}, {tp.classes}, {logits});
  return std::move(b.g);
}

// One transformer layer: scale/shift pair standing in for normalization,
// fused qkv projection split with strided slices, per-head score and
// context products as batched MUL nodes, tanh-approximated gelu in the MLP.
int emit_vit_layer(GraphBuilder& b, int x, std::int64_t S, std::int64_t E, std::int64_t H,
                   std::int64_t D, std::int64_t ratio_x100) {
  auto se = std::vector<std::int64_t>{S, E};
  int ln1 = b.add(OpType::kAdd, {}, se, {b.add(OpType::kMul, {}, se, {x})});
  std::int64_t hd = H * D;
  int qkv = b.add(OpType::kDense,
                  {{"in_channels", E}, {"out_channels", 3 * hd}, {"num_heads", H}},
                  {S, 3 * hd}, {ln1});
  int sq = b.add(OpType::kStridedSlice, {}, {S, hd}, {qkv});
  int sk = b.add(OpType::kStridedSlice, {}, {S, hd}, {qkv});
  int sv = b.add(OpType::kStridedSlice, {}, {S, hd}, {qkv});
  int rq = b.add(OpType::kReshape, {}, {H, S, D}, {sq});
  int rk = b.add(OpType::kReshape, {}, {H, S, D}, {sk});
  int rv = b.add(OpType::kReshape, {}, {H, S, D}, {sv});
  int tk = b.add(OpType::kTranspose, {}, {H, D, S}, {rk});
  int scores = b.add(OpType::kMul, {}, {H, S, S}, {rq, tk});
  int attn = b.add(OpType::kSoftmax, {{"num_heads", H}}, {H, S, S}, {scores});
  int ctx = b.add(OpType::kMul, {}, {H, S, D}, {attn, rv});
  int tc = b.add(OpType::kTranspose, {}, {S, H, D}, {ctx});
  int rc = b.add(OpType::kReshape, {}, {S, hd}, {tc});
  int proj = b.add(OpType::kDense, {{"in_channels", hd}, {"out_channels", E}}, se, {rc});
  int res1 = b.add(OpType::kAdd, {}, se, {x, proj});

  int ln2 = b.add(OpType::kAdd, {}, se, {b.add(OpType::kMul, {}, se, {res1})});
  std::int64_t hidden = E * ratio_x100 / 100;
  auto sh = std::vector<std::int64_t>{S, hidden};
  int fc1 = b.add(OpType::kDense,
                  {{"in_channels", E}, {"out_channels", hidden}, {"mlp_ratio_x100", ratio_x100}},
                  sh, {ln2});
  int cube = b.add(OpType::kPow, {}, sh, {fc1});
  int scaled = b.add(OpType::kMul, {}, sh, {cube});
  int inner = b.add(OpType::kAdd, {}, sh, {fc1, scaled});
  int gate = b.add(OpType::kTanh, {}, sh, {inner});
  int act = b.add(OpType::kMul, {}, sh, {fc1, gate});
  int fc2 = b.add(OpType::kDense, {{"in_channels", hidden}, {"out_channels", E}}, se, {act});
  return b.add(OpType::kAdd, {}, se, {res1, fc2});
}

// Draw schedule: embed, heads, qkv width, mlp ratio, depth.
ModelGraph sample_vit(const DesignSpaceSpec& spec, const TemplateParams& tp, SplitMix64& rng) {
  const VitOptions& vo = spec.vit_options;
  std::int64_t E = vo.embed_dims[rng.uniform_index(vo.embed_dims.size())];
  std::int64_t H = vo.head_counts[rng.uniform_index(vo.head_counts.size())];
  std::int64_t D = vo.qkv_dims[rng.uniform_index(vo.qkv_dims.size())];
  std::int64_t R = vo.mlp_ratios_x100[rng.uniform_index(vo.mlp_ratios_x100.size())];
  int depth = vo.depth_range.first +
              static_cast<int>(rng.uniform_index(vo.depth_range.second - vo.depth_range.first + 1));

  GraphBuilder b;
  std::int64_t S = tp.grid_h * tp.grid_w;
  int patches = b.add(OpType::kReshape, {}, {tp.grid_h, tp.grid_w, tp.patch_dim}, {});
  int tokens = b.add(OpType::kReshape, {}, {S, tp.patch_dim}, {patches});
  int x = b.add(OpType::kDense,
                {{"in_channels", tp.patch_dim}, {"out_channels", E}, {"embed_dim", E}},
                {S, E}, {tokens});
  x = b.add(OpType::kAdd, {}, {S, E}, {b.add(OpType::kMul, {}, {S, E}, {x})});

  for (int layer = 0; layer < depth; ++layer) x = emit_vit_layer(b, x, S, E, H, D, R);

  // classifier head: first/last token slices, concatenated
  int s1 = b.add(OpType::kStridedSlice, {}, {1, E}, {x});
  int s2 = b.add(OpType::kStridedSlice, {}, {1, E}, {x});
  int cat = b.add(OpType::kConcat, {}, {1, 2 * E}, {s1, s2});
  int logits = b.add(OpType::kDense, {{"in_channels", 2 * E}, {"out_channels", tp.classes}},
                     {1, tp.classes}, {cat});
  b.add(OpType::kSoftmax, {}, {1, tp.classes}, {logits});
  return std::move(b.g);
}

}  // namespace

const char* block_op_name(BlockOp op) {
  switch (op) {
    case BlockOp::kInvertedBottleneck: return "inverted_bottleneck";
    case BlockOp::kFusedMbconv: return "fused_mbconv";
    case BlockOp::kIdentity: return "identity";
  }
  return "?";
}

const char* scale_preset_name(ScalePreset p) {
  return p == ScalePreset::kPaper ? "paper" : "desk";
}

DesignSpaceSpec design_space_preset(const std::string& name, ScalePreset preset) {
  const bool paper = preset == ScalePreset::kPaper;
  DesignSpaceSpec s;
  s.name = name;
  s.scale_preset = preset;
  const std::vector<BlockOp> all_ops = {BlockOp::kInvertedBottleneck, BlockOp::kFusedMbconv,
                                        BlockOp::kIdentity};
  if (name == "cnn_large") {
    s.block_count = paper ? 6 : 3;
    s.nodes_per_block = paper ? 5 : 3;
    s.channel_options = paper ? std::vector<std::int64_t>{24, 36, 48, 72, 96, 144}
                              : std::vector<std::int64_t>{12, 24, 36};
    s.kernel_options = {{3, 3}, {5, 5}};
    s.block_op_options = all_ops;
    s.residual_optional = true;
  } else if (name == "cnn_small") {
    // same building blocks as cnn_large with 3 blocks and channels / 3
    s.block_count = 3;
    s.nodes_per_block = paper ? 5 : 2;
    s.channel_options = paper ? std::vector<std::int64_t>{8, 12, 16, 24, 32, 48}
                              : std::vector<std::int64_t>{4, 8, 12};
    s.kernel_options = {{3, 3}, {5, 5}};
    s.block_op_options = all_ops;
    s.residual_optional = true;
  } else if (name == "cnn_kws") {
    s.block_count = paper ? 3 : 2;
    s.nodes_per_block = paper ? 3 : 2;
    s.channel_options = paper ? std::vector<std::int64_t>{8, 16, 24, 36, 48, 64}
                              : std::vector<std::int64_t>{8, 16, 24};
    s.kernel_options = paper
        ? std::vector<std::pair<std::int64_t, std::int64_t>>{{3, 3}, {5, 5}, {3, 1}, {1, 3}, {10, 4}}
        : std::vector<std::pair<std::int64_t, std::int64_t>>{{3, 3}, {3, 1}, {1, 3}};
    s.block_op_options = all_ops;
    s.residual_optional = false;
  } else if (name == "vit") {
    if (paper) {
      s.vit_options = {{192, 256, 384, 512, 768}, {3, 4, 6, 8, 12}, {32, 48, 64},
                       {200, 300, 400}, {2, 12}};
    } else {
      // depth is held at 2 at desk scale; with only four gnn layers the
      // predictor cannot separate deeper stacks of identical layers, and the
      // desk preset must stay learnable in minutes
      s.vit_options = {{32, 48, 64}, {2, 4}, {8, 16}, {200, 400}, {2, 2}};
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown design space '" + name + "'");
  }
  return s;
}

void validate_spec(const DesignSpaceSpec& spec) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "design space: " + m); };
  if (spec.name != "cnn_small" && spec.name != "cnn_large" && spec.name != "cnn_kws" &&
      spec.name != "vit")
    fail("unknown name '" + spec.name + "'");
  if (spec.name == "vit") {
    const VitOptions& v = spec.vit_options;
    if (v.embed_dims.empty() || v.head_counts.empty() || v.qkv_dims.empty() ||
        v.mlp_ratios_x100.empty())
      fail("vit option lists must be non-empty");
    if (v.depth_range.first < 1 || v.depth_range.second < v.depth_range.first)
      fail("vit depth range invalid");
    for (auto e : v.embed_dims)
      for (auto r : v.mlp_ratios_x100)
        if (e * r % 100 != 0) fail("embed_dim * mlp_ratio must be an integer");
  } else {
    if (spec.block_count < 1 || spec.nodes_per_block < 1) fail("block dimensions must be >= 1");
    if (spec.channel_options.empty() || spec.kernel_options.empty() ||
        spec.block_op_options.empty())
      fail("option lists must be non-empty");
    bool has_non_identity = false;
    for (BlockOp op : spec.block_op_options)
      if (op != BlockOp::kIdentity) has_non_identity = true;
    if (!has_non_identity) fail("block op options need a non-identity member");
    for (auto c : spec.channel_options)
      if (c < 1) fail("channel options must be positive");
    for (auto [kh, kw] : spec.kernel_options)
      if (kh < 1 || kw < 1) fail("kernel options must be positive");
  }
}

std::string spec_to_json(const DesignSpaceSpec& spec) {
  json kernels = json::array();
  for (auto [kh, kw] : spec.kernel_options) kernels.push_back(json::array({kh, kw}));
  json ops = json::array();
  for (BlockOp op : spec.block_op_options) ops.push_back(block_op_name(op));
  json doc = {
      {"name", spec.name},
      {"scale_preset", scale_preset_name(spec.scale_preset)},
      {"block_count", spec.block_count},
      {"nodes_per_block", spec.nodes_per_block},
      {"channel_options", spec.channel_options},
      {"kernel_options", kernels},
      {"block_op_options", ops},
      {"residual_optional", spec.residual_optional},
      {"vit_options",
       {{"embed_dims", spec.vit_options.embed_dims},
        {"head_counts", spec.vit_options.head_counts},
        {"qkv_dims", spec.vit_options.qkv_dims},
        {"mlp_ratios_x100", spec.vit_options.mlp_ratios_x100},
        {"depth_range", json::array({spec.vit_options.depth_range.first,
                                     spec.vit_options.depth_range.second})}}},
  };
  return doc.dump();
}

DesignSpaceSpec spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("design space document: ") + e.what());
  }
  try {
    std::string name = doc.at("name").get<std::string>();
    ScalePreset preset = ScalePreset::kDesk;
    if (doc.contains("scale_preset")) {
      std::string p = doc["scale_preset"].get<std::string>();
      if (p == "paper")
        preset = ScalePreset::kPaper;
      else if (p != "desk")
        throw Error(ErrorCode::kMalformedInput, "scale_preset must be 'paper' or 'desk'");
    }
    DesignSpaceSpec spec = design_space_preset(name, preset);
    if (doc.contains("block_count")) spec.block_count = doc["block_count"].get<int>();
    if (doc.contains("nodes_per_block")) spec.nodes_per_block = doc["nodes_per_block"].get<int>();
    if (doc.contains("channel_options"))
      spec.channel_options = doc["channel_options"].get<std::vector<std::int64_t>>();
    if (doc.contains("kernel_options")) {
      spec.kernel_options.clear();
      for (const auto& k : doc["kernel_options"])
        spec.kernel_options.emplace_back(k.at(0).get<std::int64_t>(), k.at(1).get<std::int64_t>());
    }
    if (doc.contains("block_op_options")) {
      spec.block_op_options.clear();
      for (const auto& o : doc["block_op_options"]) {
        std::string s = o.get<std::string>();
        if (s == "inverted_bottleneck")
          spec.block_op_options.push_back(BlockOp::kInvertedBottleneck);
        else if (s == "fused_mbconv")
          spec.block_op_options.push_back(BlockOp::kFusedMbconv);
        else if (s == "identity")
          spec.block_op_options.push_back(BlockOp::kIdentity);
        else
          throw Error(ErrorCode::kMalformedInput, "unknown block op '" + s + "'");
      }
    }
    if (doc.contains("residual_optional")) spec.residual_optional = doc["residual_optional"].get<bool>();
    if (doc.contains("vit_options")) {
      const json& v = doc["vit_options"];
      if (v.contains("embed_dims")) spec.vit_options.embed_dims = v["embed_dims"].get<std::vector<std::int64_t>>();
      if (v.contains("head_counts")) spec.vit_options.head_counts = v["head_counts"].get<std::vector<std::int64_t>>();
      if (v.contains("qkv_dims")) spec.vit_options.qkv_dims = v["qkv_dims"].get<std::vector<std::int64_t>>();
      if (v.contains("mlp_ratios_x100"))
        spec.vit_options.mlp_ratios_x100 = v["mlp_ratios_x100"].get<std::vector<std::int64_t>>();
      if (v.contains("depth_range"))
        spec.vit_options.depth_range = {v["depth_range"].at(0).get<int>(),
                                        v["depth_range"].at(1).get<int>()};
    }
    validate_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("design space document: ") + e.what());
  }
}

std::uint64_t spec_hash(const DesignSpaceSpec& spec) { return fnv1a(spec_to_json(spec)); }

ModelGraph sample_model(const DesignSpaceSpec& spec, std::int64_t seed) {
  validate_spec(spec);
  SplitMix64 rng(mix64(spec_hash(spec), static_cast<std::uint64_t>(seed)));
  TemplateParams tp = template_params(spec);
  ModelGraph g = spec.name == "vit" ? sample_vit(spec, tp, rng) : sample_cnn(spec, tp, rng);
  g.design_space = spec.name;
  g.seed = seed;
  g.metadata = graph_stats(g);
  return g;
}

std::vector<ModelGraph> sample_dataset(const DesignSpaceSpec& spec, int n, std::int64_t seed) {
  std::vector<ModelGraph> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(sample_model(spec, seed + i));
  return out;
}

}  // namespace perfsage
