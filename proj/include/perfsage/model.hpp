#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "perfsage/features.hpp"
#include "perfsage/tensor.hpp"

namespace perfsage {

struct ModelConfig {
  int d_embed = 8;
  int d_hidden = 64;
  int gnn_layers = 4;     // 8 at paper scale
  int head_layers = 4;
  int head_hidden = 128;  // 1024 at paper scale
  double alpha_mse = 10.0;
  MseVariant mse_variant = MseVariant::kAsPrinted;
  int category_count = kOpTypeCount;
  bool use_cfe = true;              // per-category encoders and embedding rows
  bool undirected_neighbors = true; // false: aggregate out-neighbors only

  int encoder_input_dim() const { return kNodeFeatureDim + kEdgeFeatureDim + d_embed; }
  void validate() const;  // throws kInvalidArgument
};

// Every trainable tensor of the predictor plus the feature normalization it
// was fitted with.
struct PredictorParams {
  Tensor2 embedding;                // C x d_embed
  std::vector<Tensor2> encoder_w;   // C of (17 + d_embed) x d_hidden
  std::vector<Tensor2> encoder_b;   // C of 1 x d_hidden
  std::vector<Tensor2> gnn_w;       // K of 2*d_hidden x d_hidden
  std::vector<Tensor2> gnn_b;       // K of 1 x d_hidden
  std::vector<Tensor2> head_w;
  std::vector<Tensor2> head_b;
  NormStats norm_stats;
  int schema_version = kFeatureSchemaVersion;
};

// Glorot-uniform weights, zero biases, embedding rows uniform in +-0.05.
// Bit-reproducible per (cfg, seed).
PredictorParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// Canonical enumeration of parameter tensors; optimizer state, gradients and
// the checkpoint tensor manifest all follow this order.
void for_each_param(PredictorParams& p,
                    const std::function<void(const std::string&, Tensor2&)>& fn);
void for_each_param(const PredictorParams& p,
                    const std::function<void(const std::string&, const Tensor2&)>& fn);

struct ForwardHandles {
  TensorId prediction = -1;          // 1x1
  std::vector<TensorId> param_ids;   // aligned with for_each_param order
};

// Records the whole predictor on the tape. `fg` must already be normalized
// with params.norm_stats; params and fg must outlive the tape.
ForwardHandles forward_on_tape(Tape& tape, const ModelConfig& cfg, const PredictorParams& params,
                               const FeaturizedGraph& fg);

// h0: per-node hidden vectors from the category-selected input encoders.
Tensor2 node_embed(const ModelConfig& cfg, const PredictorParams& params,
                   const FeaturizedGraph& fg);

// K rounds of neighbor-sum aggregation over the given adjacency.
Tensor2 gnn_forward(const ModelConfig& cfg, const PredictorParams& params, const Tensor2& h0,
                    const std::vector<std::vector<int>>& adjacency);

// Scalar prediction: max-pooled final node embeddings through the head.
double predict(const ModelConfig& cfg, const PredictorParams& params, const FeaturizedGraph& fg);

// MAPE(x, y) + alpha * MSE(x, y); y must be positive.
double hybrid_loss(double x, double y, double alpha,
                   MseVariant variant = MseVariant::kAsPrinted);

}  // namespace perfsage
