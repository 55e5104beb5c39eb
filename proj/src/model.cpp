#include "perfsage/model.hpp"

#include <cmath>

#include "perfsage/rng.hpp"

namespace perfsage {

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "model config: " + m); };
  if (d_embed < 1 || d_hidden < 1 || head_hidden < 1) fail("widths must be >= 1");
  if (gnn_layers < 1) fail("gnn_layers must be >= 1");
  if (head_layers < 1) fail("head_layers must be >= 1");
  if (alpha_mse < 0) fail("alpha_mse must be >= 0");
  if (category_count < 1) fail("category_count must be >= 1");
}

namespace {

Tensor2 glorot(SplitMix64& rng, int rows, int cols) {
  Tensor2 t(rows, cols);
  const double bound = std::sqrt(6.0 / (rows + cols));
  for (double& v : t.data) v = rng.uniform_symmetric(bound);
  return t;
}

}  // namespace

PredictorParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SplitMix64 rng(mix64(0x70657266u, seed));
  PredictorParams p;
  p.embedding = Tensor2(cfg.category_count, cfg.d_embed);
  for (double& v : p.embedding.data) v = rng.uniform_symmetric(0.05);
  for (int c = 0; c < cfg.category_count; ++c) {
    p.encoder_w.push_back(glorot(rng, cfg.encoder_input_dim(), cfg.d_hidden));
    p.encoder_b.push_back(Tensor2(1, cfg.d_hidden));
  }
  for (int k = 0; k < cfg.gnn_layers; ++k) {
    p.gnn_w.push_back(glorot(rng, 2 * cfg.d_hidden, cfg.d_hidden));
    p.gnn_b.push_back(Tensor2(1, cfg.d_hidden));
  }
  for (int l = 0; l < cfg.head_layers; ++l) {
    int in = l == 0 ? cfg.d_hidden : cfg.head_hidden;
    int out = l == cfg.head_layers - 1 ? 1 : cfg.head_hidden;
    p.head_w.push_back(glorot(rng, in, out));
    p.head_b.push_back(Tensor2(1, out));
  }
  return p;
}

void for_each_param(PredictorParams& p,
                    const std::function<void(const std::string&, Tensor2&)>& fn) {
  fn("embedding", p.embedding);
  for (size_t c = 0; c < p.encoder_w.size(); ++c) {
    fn("encoder_w." + std::to_string(c), p.encoder_w[c]);
    fn("encoder_b." + std::to_string(c), p.encoder_b[c]);
  }
  for (size_t k = 0; k < p.gnn_w.size(); ++k) {
    fn("gnn_w." + std::to_string(k), p.gnn_w[k]);
    fn("gnn_b." + std::to_string(k), p.gnn_b[k]);
  }
  for (size_t l = 0; l < p.head_w.size(); ++l) {
    fn("head_w." + std::to_string(l), p.head_w[l]);
    fn("head_b." + std::to_string(l), p.head_b[l]);
  }
}

void for_each_param(const PredictorParams& p,
                    const std::function<void(const std::string&, const Tensor2&)>& fn) {
  for_each_param(const_cast<PredictorParams&>(p),
                 [&fn](const std::string& name, Tensor2& t) { fn(name, t); });
}

namespace {

struct ParamIds {
  TensorId embedding;
  std::vector<TensorId> encoder_w, encoder_b, gnn_w, gnn_b, head_w, head_b;
};

ParamIds register_params(Tape& tape, const PredictorParams& p, std::vector<TensorId>* order) {
  ParamIds ids;
  ids.embedding = tape.leaf_ref(&p.embedding);
  order->push_back(ids.embedding);
  for (size_t c = 0; c < p.encoder_w.size(); ++c) {
    ids.encoder_w.push_back(tape.leaf_ref(&p.encoder_w[c]));
    order->push_back(ids.encoder_w.back());
    ids.encoder_b.push_back(tape.leaf_ref(&p.encoder_b[c]));
    order->push_back(ids.encoder_b.back());
  }
  for (size_t k = 0; k < p.gnn_w.size(); ++k) {
    ids.gnn_w.push_back(tape.leaf_ref(&p.gnn_w[k]));
    order->push_back(ids.gnn_w.back());
    ids.gnn_b.push_back(tape.leaf_ref(&p.gnn_b[k]));
    order->push_back(ids.gnn_b.back());
  }
  for (size_t l = 0; l < p.head_w.size(); ++l) {
    ids.head_w.push_back(tape.leaf_ref(&p.head_w[l]));
    order->push_back(ids.head_w.back());
    ids.head_b.push_back(tape.leaf_ref(&p.head_b[l]));
    order->push_back(ids.head_b.back());
  }
  return ids;
}

Tensor2 input_features(const FeaturizedGraph& fg) {
  Tensor2 x(fg.n, kNodeFeatureDim + kEdgeFeatureDim);
  for (int i = 0; i < fg.n; ++i) {
    double* row = x.row(i);
    for (int j = 0; j < kNodeFeatureDim; ++j) row[j] = fg.node_feats.at(i, j);
    for (int j = 0; j < kEdgeFeatureDim; ++j) row[kNodeFeatureDim + j] = fg.edge_feats.at(i, j);
  }
  return x;
}

// h0 per category: gather rows, append the category's embedding row, run the
// category's encoder, scatter back. Categories absent from the graph never
// touch the computation.
TensorId build_node_embed(Tape& tape, const ModelConfig& cfg, const ParamIds& ids,
                          const FeaturizedGraph& fg, TensorId x) {
  std::vector<std::vector<int>> rows_by_cat(cfg.category_count);
  for (int i = 0; i < fg.n; ++i) {
    int c = cfg.use_cfe ? fg.categories[i] : 0;
    if (c < 0 || c >= cfg.category_count)
      throw Error(ErrorCode::kVersionMismatch, "category index outside the trained schema");
    rows_by_cat[c].push_back(i);
  }
  TensorId h0 = -1;
  for (int c = 0; c < cfg.category_count; ++c) {
    if (rows_by_cat[c].empty()) continue;
    const int m = static_cast<int>(rows_by_cat[c].size());
    TensorId xc = tape.select_rows(x, rows_by_cat[c]);
    TensorId emb = tape.repeat_row(tape.select_rows(ids.embedding, {c}), m);
    TensorId in = tape.concat_cols(xc, emb);
    TensorId act = tape.relu(tape.add_bias(tape.matmul(in, ids.encoder_w[c]), ids.encoder_b[c]));
    TensorId part = fg.n == m ? act : tape.scatter_rows(act, rows_by_cat[c], fg.n);
    h0 = h0 < 0 ? part : tape.add(h0, part);
  }
  return h0;
}

TensorId build_gnn(Tape& tape, const ModelConfig& cfg, const ParamIds& ids,
                   const FeaturizedGraph& fg, TensorId h) {
  const auto* adjacency = cfg.undirected_neighbors ? &fg.adjacency : &fg.out_neighbors;
  for (int k = 0; k < cfg.gnn_layers; ++k) {
    TensorId agg = tape.sum_rows(h, adjacency);
    TensorId z = tape.matmul(tape.concat_cols(h, agg), ids.gnn_w[k]);
    h = tape.relu(tape.add_bias(z, ids.gnn_b[k]));
  }
  return h;
}

TensorId build_head(Tape& tape, const ModelConfig& cfg, const ParamIds& ids, TensorId pooled) {
  TensorId z = pooled;
  for (int l = 0; l < cfg.head_layers; ++l) {
    z = tape.add_bias(tape.matmul(z, ids.head_w[l]), ids.head_b[l]);
    if (l + 1 < cfg.head_layers) z = tape.relu(z);
  }
  return z;
}

}  // namespace

ForwardHandles forward_on_tape(Tape& tape, const ModelConfig& cfg, const PredictorParams& params,
                               const FeaturizedGraph& fg) {
  if (params.schema_version != kFeatureSchemaVersion)
    throw Error(ErrorCode::kVersionMismatch, "parameters built against a different feature schema");
  if (fg.n < 1) throw Error(ErrorCode::kInvalidArgument, "cannot predict on an empty graph");
  ForwardHandles out;
  ParamIds ids = register_params(tape, params, &out.param_ids);
  TensorId x = tape.leaf(input_features(fg));
  TensorId h0 = build_node_embed(tape, cfg, ids, fg, x);
  TensorId hk = build_gnn(tape, cfg, ids, fg, h0);
  TensorId pooled = tape.max_cols_over_rows(hk);
  out.prediction = build_head(tape, cfg, ids, pooled);
  if (!tape.value(out.prediction).finite())
    throw Error(ErrorCode::kDivergence, "non-finite prediction");
  return out;
}

Tensor2 node_embed(const ModelConfig& cfg, const PredictorParams& params,
                   const FeaturizedGraph& fg) {
  if (params.schema_version != kFeatureSchemaVersion)
    throw Error(ErrorCode::kVersionMismatch, "parameters built against a different feature schema");
  Tape tape;
  std::vector<TensorId> order;
  ParamIds ids = register_params(tape, params, &order);
  TensorId x = tape.leaf(input_features(fg));
  return tape.value(build_node_embed(tape, cfg, ids, fg, x));
}

Tensor2 gnn_forward(const ModelConfig& cfg, const PredictorParams& params, const Tensor2& h0,
                    const std::vector<std::vector<int>>& adjacency) {
  Tape tape;
  TensorId h = tape.leaf(h0);
  for (int k = 0; k < cfg.gnn_layers; ++k) {
    TensorId agg = tape.sum_rows(h, &adjacency);
    TensorId z = tape.matmul(tape.concat_cols(h, agg), tape.leaf(params.gnn_w[k]));
    h = tape.relu(tape.add_bias(z, tape.leaf(params.gnn_b[k])));
  }
  return tape.value(h);
}

double predict(const ModelConfig& cfg, const PredictorParams& params, const FeaturizedGraph& fg) {
  Tape tape;
  ForwardHandles h = forward_on_tape(tape, cfg, params, fg);
  return tape.value(h.prediction).data[0];
}

double hybrid_loss(double x, double y, double alpha, MseVariant variant) {
  if (y <= 0.0) throw Error(ErrorCode::kInvalidArgument, "hybrid_loss label must be positive");
  const double diff = x - y;
  const double ad = std::abs(diff);
  const double mse = variant == MseVariant::kAsPrinted ? ad : diff * diff;
  return ad / y + alpha * mse;
}

}  // namespace perfsage
