#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "perfsage/model.hpp"
#include "perfsage/oracle.hpp"

namespace perfsage {

enum class TrainMode { kSpecialized, kGeneralized };

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  TrainMode mode = TrainMode::kGeneralized;
  std::string target = "cpu_latency";
  double split_fraction = 0.8;
  double upsample_min_frac = 0.10;
  bool use_upsampling = true;
  OptimConfig optimizer;
  int batch_size = 64;
  int max_epochs = 200;
  int patience = 20;  // epochs without a validation-MAPE improvement
  std::uint64_t seed = 0;
  ModelConfig model;

  void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mape = 0.0;
};

struct Checkpoint {
  int format_version = 1;
  int schema_version = kFeatureSchemaVersion;
  ModelConfig model_cfg;
  std::string target;
  PredictorParams params;  // best validation MAPE
  std::vector<EpochStats> history;
  std::string config_hash;
  std::string dataset_hash;
  std::uint64_t seed = 0;
};

// Deterministic shuffle stratified per design space: each space contributes
// floor(fraction * n_space), at least 1, to the first set. Returns index
// partitions into the input vector.
std::pair<std::vector<size_t>, std::vector<size_t>> split_dataset(
    const std::vector<LabeledSample>& samples, double fraction, std::uint64_t seed);

// Smallest integer replication factors such that every space holds at least
// min_frac of the replicated mixture. Factors are raised smallest space
// first and re-checked jointly until the constraint holds for all spaces.
std::map<std::string, int> compute_upsample_factors(
    const std::map<std::string, std::int64_t>& space_counts, double min_frac);

// Mini-batch optimization with adaptive moment estimation, per-design-space
// upsampling by index replication, and best-validation early stopping.
Checkpoint train(const TrainConfig& cfg, const std::vector<LabeledSample>& train_set,
                 const std::vector<LabeledSample>& val_set);

// Carves a stratified 10% validation set out of `samples` and trains on the
// rest. Used by the CLI and experiment drivers.
Checkpoint train_with_auto_val(const TrainConfig& cfg, const std::vector<LabeledSample>& samples);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Featurize, normalize with the checkpoint's stats, and predict.
double predict_sample(const Checkpoint& ckpt, const ModelGraph& graph);

std::uint64_t dataset_hash(const std::vector<LabeledSample>& samples);
std::string hash_hex(std::uint64_t h);

}  // namespace perfsage
