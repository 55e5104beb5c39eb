#include "perfsage/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "perfsage/rng.hpp"

namespace perfsage {

using json = nlohmann::json;

namespace {

std::uint64_t fnv1a_acc(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T>
void shuffle_indices(std::vector<T>& v, SplitMix64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

double mean_ape(const std::vector<double>& preds, const std::vector<double>& labels) {
  double s = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - labels[i]) / labels[i];
  return s / static_cast<double>(preds.size());
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "train config: " + m); };
  if (split_fraction <= 0.0 || split_fraction >= 1.0) fail("split_fraction must be in (0, 1)");
  if (upsample_min_frac < 0.0 || upsample_min_frac >= 1.0) fail("upsample_min_frac must be in [0, 1)");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (optimizer.lr <= 0.0) fail("learning rate must be positive");
  model.validate();
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json doc = {
      {"mode", cfg.mode == TrainMode::kGeneralized ? "generalized" : "specialized"},
      {"target", cfg.target},
      {"split_fraction", cfg.split_fraction},
      {"upsample_min_frac", cfg.upsample_min_frac},
      {"use_upsampling", cfg.use_upsampling},
      {"optimizer",
       {{"lr", cfg.optimizer.lr},
        {"beta1", cfg.optimizer.beta1},
        {"beta2", cfg.optimizer.beta2},
        {"eps", cfg.optimizer.eps}}},
      {"batch_size", cfg.batch_size},
      {"max_epochs", cfg.max_epochs},
      {"patience", cfg.patience},
      {"seed", cfg.seed},
      {"model",
       {{"d_embed", cfg.model.d_embed},
        {"d_hidden", cfg.model.d_hidden},
        {"gnn_layers", cfg.model.gnn_layers},
        {"head_layers", cfg.model.head_layers},
        {"head_hidden", cfg.model.head_hidden},
        {"alpha_mse", cfg.model.alpha_mse},
        {"mse_variant", cfg.model.mse_variant == MseVariant::kAsPrinted ? "as_printed" : "squared"},
        {"category_count", cfg.model.category_count},
        {"use_cfe", cfg.model.use_cfe},
        {"undirected_neighbors", cfg.model.undirected_neighbors}}},
  };
  return doc.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("train config: ") + e.what());
  }
  TrainConfig cfg;
  try {
    if (doc.contains("mode")) {
      std::string m = doc["mode"].get<std::string>();
      if (m == "generalized")
        cfg.mode = TrainMode::kGeneralized;
      else if (m == "specialized")
        cfg.mode = TrainMode::kSpecialized;
      else
        throw Error(ErrorCode::kMalformedInput, "mode must be specialized or generalized");
    }
    auto get = [](const json& j, const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
    };
    get(doc, "target", cfg.target);
    get(doc, "split_fraction", cfg.split_fraction);
    get(doc, "upsample_min_frac", cfg.upsample_min_frac);
    get(doc, "use_upsampling", cfg.use_upsampling);
    if (doc.contains("optimizer")) {
      const json& o = doc["optimizer"];
      get(o, "lr", cfg.optimizer.lr);
      get(o, "beta1", cfg.optimizer.beta1);
      get(o, "beta2", cfg.optimizer.beta2);
      get(o, "eps", cfg.optimizer.eps);
    }
    get(doc, "batch_size", cfg.batch_size);
    get(doc, "max_epochs", cfg.max_epochs);
    get(doc, "patience", cfg.patience);
    get(doc, "seed", cfg.seed);
    if (doc.contains("model")) {
      const json& m = doc["model"];
      get(m, "d_embed", cfg.model.d_embed);
      get(m, "d_hidden", cfg.model.d_hidden);
      get(m, "gnn_layers", cfg.model.gnn_layers);
      get(m, "head_layers", cfg.model.head_layers);
      get(m, "head_hidden", cfg.model.head_hidden);
      get(m, "alpha_mse", cfg.model.alpha_mse);
      if (m.contains("mse_variant")) {
        std::string v = m["mse_variant"].get<std::string>();
        if (v == "as_printed")
          cfg.model.mse_variant = MseVariant::kAsPrinted;
        else if (v == "squared")
          cfg.model.mse_variant = MseVariant::kSquared;
        else
          throw Error(ErrorCode::kMalformedInput, "mse_variant must be as_printed or squared");
      }
      get(m, "category_count", cfg.model.category_count);
      get(m, "use_cfe", cfg.model.use_cfe);
      get(m, "undirected_neighbors", cfg.model.undirected_neighbors);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_dataset(
    const std::vector<LabeledSample>& samples, double fraction, std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot split an empty dataset");
  if (fraction <= 0.0 || fraction >= 1.0)
    throw Error(ErrorCode::kInvalidArgument, "split fraction must be in (0, 1)");
  std::map<std::string, std::vector<size_t>> by_space;
  for (size_t i = 0; i < samples.size(); ++i) by_space[samples[i].design_space].push_back(i);

  std::vector<size_t> train, test;
  for (auto& [space, idx] : by_space) {
    if (idx.size() < 2)
      throw Error(ErrorCode::kInvalidArgument,
                  "design space '" + space + "' needs at least 2 samples to split");
    SplitMix64 rng(mix64(seed, fnv1a(space)));
    shuffle_indices(idx, rng);
    size_t n_train = std::max<size_t>(1, static_cast<size_t>(fraction * static_cast<double>(idx.size())));
    if (n_train >= idx.size()) n_train = idx.size() - 1;
    train.insert(train.end(), idx.begin(), idx.begin() + n_train);
    test.insert(test.end(), idx.begin() + n_train, idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::map<std::string, int> compute_upsample_factors(
    const std::map<std::string, std::int64_t>& space_counts, double min_frac) {
  for (const auto& [space, n] : space_counts)
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "space counts must be positive");
  if (space_counts.empty())
    throw Error(ErrorCode::kInvalidArgument, "need at least one design space");
  if (min_frac * static_cast<double>(space_counts.size()) >= 1.0)
    throw Error(ErrorCode::kInvalidArgument, "infeasible minimum fraction for this many spaces");

  // ascending count order; ties by name for determinism
  std::vector<std::pair<std::string, std::int64_t>> order(space_counts.begin(), space_counts.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });

  std::map<std::string, int> factors;
  for (const auto& [space, n] : space_counts) factors[space] = 1;

  // Raising one factor grows the total and can push another space back under
  // the threshold, so sweep until a fixed point. Factors only grow and are
  // bounded by the least feasible solution, so the sweep terminates.
  auto satisfied = [min_frac](std::int64_t r, std::int64_t n, double others) {
    double rn = static_cast<double>(r) * static_cast<double>(n);
    return rn >= min_frac * (others + rn);
  };
  for (int pass = 0; pass < 100000; ++pass) {
    bool changed = false;
    for (const auto& [space, n] : order) {
      double others = 0.0;
      for (const auto& [s2, n2] : space_counts)
        if (s2 != space) others += static_cast<double>(factors[s2]) * static_cast<double>(n2);
      // smallest r with r*n / (others + r*n) >= min_frac
      std::int64_t r = std::max<std::int64_t>(
          factors[space],
          static_cast<std::int64_t>(
              std::ceil(min_frac * others / (static_cast<double>(n) * (1.0 - min_frac)))));
      if (r < 1) r = 1;
      while (!satisfied(r, n, others)) ++r;
      while (r > factors[space] && satisfied(r - 1, n, others)) --r;
      if (r != factors[space]) {
        factors[space] = static_cast<int>(r);
        changed = true;
      }
    }
    if (!changed) return factors;
  }
  throw Error(ErrorCode::kInvalidArgument, "upsampling factors did not converge");
}

std::uint64_t dataset_hash(const std::vector<LabeledSample>& samples) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& s : samples) {
    h = fnv1a_acc(h, labeled_sample_to_json(s));
    h = fnv1a_acc(h, "\n");
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct Prepared {
  std::vector<FeaturizedGraph> feats;
  std::vector<double> labels;
};

Prepared prepare(const std::vector<LabeledSample>& samples, const std::string& target,
                 const NormStats* stats) {
  Prepared p;
  p.feats.reserve(samples.size());
  p.labels.reserve(samples.size());
  for (const auto& s : samples) {
    auto it = s.labels.find(target);
    if (it == s.labels.end())
      throw Error(ErrorCode::kInvalidArgument, "sample missing label '" + target + "'");
    if (it->second <= 0.0)
      throw Error(ErrorCode::kInvalidArgument, "labels must be positive");
    FeaturizedGraph fg = featurize(s.graph);
    if (stats) apply_norm(*stats, &fg);
    p.feats.push_back(std::move(fg));
    p.labels.push_back(it->second);
  }
  return p;
}

struct AdamState {
  std::vector<Tensor2> m, v;
  std::int64_t t = 0;
};

void adam_step(std::vector<Tensor2*>& params, const std::vector<Tensor2>& grads, AdamState& st,
               const OptimConfig& opt) {
  ++st.t;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor2& w = *params[i];
    Tensor2& m = st.m[i];
    Tensor2& v = st.v[i];
    const Tensor2& g = grads[i];
    for (size_t j = 0; j < w.size(); ++j) {
      const double gj = g.data[j];
      m.data[j] = opt.beta1 * m.data[j] + (1.0 - opt.beta1) * gj;
      v.data[j] = opt.beta2 * v.data[j] + (1.0 - opt.beta2) * gj * gj;
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      w.data[j] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

}  // namespace

Checkpoint train(const TrainConfig& cfg, const std::vector<LabeledSample>& train_set,
                 const std::vector<LabeledSample>& val_set) {
  cfg.validate();
  if (train_set.empty() || val_set.empty())
    throw Error(ErrorCode::kInvalidArgument, "train and validation sets must be non-empty");

  Prepared raw_train = prepare(train_set, cfg.target, nullptr);
  NormStats stats = compute_norm_stats(raw_train.feats);
  for (auto& fg : raw_train.feats) apply_norm(stats, &fg);
  Prepared val = prepare(val_set, cfg.target, &stats);

  // index multiset; upsampling replicates whole spaces
  std::vector<size_t> multiset;
  if (cfg.use_upsampling) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& s : train_set) ++counts[s.design_space];
    auto factors = compute_upsample_factors(counts, cfg.upsample_min_frac);
    for (size_t i = 0; i < train_set.size(); ++i) {
      int r = factors.at(train_set[i].design_space);
      for (int k = 0; k < r; ++k) multiset.push_back(i);
    }
  } else {
    for (size_t i = 0; i < train_set.size(); ++i) multiset.push_back(i);
  }

  PredictorParams params = init_params(cfg.model, cfg.seed);
  params.norm_stats = stats;

  std::vector<Tensor2*> tensors;
  for_each_param(params, [&](const std::string&, Tensor2& t) { tensors.push_back(&t); });
  AdamState adam;
  for (Tensor2* t : tensors) {
    adam.m.emplace_back(t->rows, t->cols);
    adam.v.emplace_back(t->rows, t->cols);
  }

  Checkpoint ckpt;
  ckpt.model_cfg = cfg.model;
  ckpt.target = cfg.target;
  ckpt.seed = cfg.seed;
  ckpt.config_hash = hash_hex(fnv1a(train_config_to_json(cfg)));
  std::uint64_t dh = dataset_hash(train_set);
  dh = mix64(dh, dataset_hash(val_set));
  ckpt.dataset_hash = hash_hex(dh);

  PredictorParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<Tensor2> grad_acc;
  for (Tensor2* t : tensors) grad_acc.emplace_back(t->rows, t->cols);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    SplitMix64 erng(mix64(mix64(cfg.seed, 0x45504f43ull), static_cast<std::uint64_t>(epoch)));
    std::vector<size_t> sched = multiset;
    shuffle_indices(sched, erng);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < sched.size(); start += cfg.batch_size) {
      const size_t stop = std::min(sched.size(), start + cfg.batch_size);
      const double bs = static_cast<double>(stop - start);
      for (auto& g : grad_acc) std::fill(g.data.begin(), g.data.end(), 0.0);
      double batch_loss = 0.0;
      for (size_t s = start; s < stop; ++s) {
        const size_t idx = sched[s];
        Tape tape;
        ForwardHandles h = forward_on_tape(tape, cfg.model, params, raw_train.feats[idx]);
        TensorId loss = tape.hybrid_loss(h.prediction, raw_train.labels[idx],
                                         cfg.model.alpha_mse, cfg.model.mse_variant);
        batch_loss += tape.value(loss).data[0];
        tape.backward(loss);
        for (size_t i = 0; i < tensors.size(); ++i) {
          const Tensor2& g = tape.grad(h.param_ids[i]);
          if (g.empty()) continue;
          for (size_t j = 0; j < g.size(); ++j) grad_acc[i].data[j] += g.data[j] / bs;
        }
      }
      batch_loss /= bs;
      if (!std::isfinite(batch_loss))
        throw Error(ErrorCode::kDivergence,
                    "non-finite loss at optimizer step " + std::to_string(adam.t + 1));
      adam_step(tensors, grad_acc, adam, cfg.optimizer);
      epoch_loss += batch_loss * bs;
    }
    epoch_loss /= static_cast<double>(sched.size());

    std::vector<double> preds(val.feats.size());
    for (size_t i = 0; i < val.feats.size(); ++i)
      preds[i] = predict(cfg.model, params, val.feats[i]);
    const double val_mape = mean_ape(preds, val.labels);
    ckpt.history.push_back({epoch, epoch_loss, val_mape});

    if (val_mape < best_val) {
      best_val = val_mape;
      best = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  ckpt.params = std::move(best);
  return ckpt;
}

Checkpoint train_with_auto_val(const TrainConfig& cfg, const std::vector<LabeledSample>& samples) {
  std::map<std::string, std::vector<size_t>> by_space;
  for (size_t i = 0; i < samples.size(); ++i) by_space[samples[i].design_space].push_back(i);
  std::vector<size_t> val_idx, fit_idx;
  for (auto& [space, idx] : by_space) {
    SplitMix64 rng(mix64(mix64(cfg.seed, fnv1a("val-carve")), fnv1a(space)));
    shuffle_indices(idx, rng);
    size_t n_val = idx.size() >= 10 ? idx.size() / 10 : (idx.size() >= 2 ? 1 : 0);
    val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + n_val);
    fit_idx.insert(fit_idx.end(), idx.begin() + n_val, idx.end());
  }
  if (val_idx.empty())
    throw Error(ErrorCode::kInvalidArgument, "dataset too small to carve a validation set");
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(fit_idx.begin(), fit_idx.end());
  std::vector<LabeledSample> fit, val;
  for (size_t i : fit_idx) fit.push_back(samples[i]);
  for (size_t i : val_idx) val.push_back(samples[i]);
  return train(cfg, fit, val);
}

namespace {

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32(const std::string& s, size_t& pos) {
  if (pos + 4 > s.size()) throw Error(ErrorCode::kMalformedInput, "truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
  return v;
}

std::uint64_t read_u64(const std::string& s, size_t& pos) {
  if (pos + 8 > s.size()) throw Error(ErrorCode::kMalformedInput, "truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
  return v;
}

json model_cfg_to_json(const ModelConfig& m) {
  return {{"d_embed", m.d_embed},
          {"d_hidden", m.d_hidden},
          {"gnn_layers", m.gnn_layers},
          {"head_layers", m.head_layers},
          {"head_hidden", m.head_hidden},
          {"alpha_mse", m.alpha_mse},
          {"mse_variant", m.mse_variant == MseVariant::kAsPrinted ? "as_printed" : "squared"},
          {"category_count", m.category_count},
          {"use_cfe", m.use_cfe},
          {"undirected_neighbors", m.undirected_neighbors}};
}

ModelConfig model_cfg_from_json(const json& j) {
  ModelConfig m;
  m.d_embed = j.at("d_embed").get<int>();
  m.d_hidden = j.at("d_hidden").get<int>();
  m.gnn_layers = j.at("gnn_layers").get<int>();
  m.head_layers = j.at("head_layers").get<int>();
  m.head_hidden = j.at("head_hidden").get<int>();
  m.alpha_mse = j.at("alpha_mse").get<double>();
  m.mse_variant = j.at("mse_variant").get<std::string>() == "squared" ? MseVariant::kSquared
                                                                      : MseVariant::kAsPrinted;
  m.category_count = j.at("category_count").get<int>();
  m.use_cfe = j.at("use_cfe").get<bool>();
  m.undirected_neighbors = j.at("undirected_neighbors").get<bool>();
  return m;
}

constexpr char kMagic[4] = {'P', 'S', 'G', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json tensors = json::array();
  std::string blob;
  auto emit = [&](const std::string& name, const Tensor2& t) {
    tensors.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
    for (double d : t.data) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      append_u64(blob, bits);
    }
  };
  for_each_param(ckpt.params, emit);
  Tensor2 mean(1, static_cast<int>(ckpt.params.norm_stats.mean.size()));
  mean.data = ckpt.params.norm_stats.mean;
  Tensor2 stdev(1, static_cast<int>(ckpt.params.norm_stats.stdev.size()));
  stdev.data = ckpt.params.norm_stats.stdev;
  emit("norm_mean", mean);
  emit("norm_std", stdev);

  json history = json::array();
  for (const auto& e : ckpt.history)
    history.push_back(json::array({e.epoch, e.train_loss, e.val_mape}));

  json header = {{"schema_version", ckpt.schema_version},
                 {"target", ckpt.target},
                 {"seed", ckpt.seed},
                 {"config_hash", ckpt.config_hash},
                 {"dataset_hash", ckpt.dataset_hash},
                 {"model_cfg", model_cfg_to_json(ckpt.model_cfg)},
                 {"history", history},
                 {"tensors", tensors}};
  std::string header_bytes = header.dump();

  std::string out;
  out.append(kMagic, 4);
  append_u32(out, kFormatVersion);
  append_u64(out, header_bytes.size());
  out += header_bytes;
  append_u64(out, blob.size());
  out += blob;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kMalformedInput, "cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kMalformedInput, "cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::kMalformedInput, "not a checkpoint file (bad magic)");
  size_t pos = 4;
  std::uint32_t version = read_u32(bytes, pos);
  if (version != kFormatVersion)
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint format_version " + std::to_string(version) + " not supported");
  std::uint64_t hlen = read_u64(bytes, pos);
  if (pos + hlen > bytes.size()) throw Error(ErrorCode::kMalformedInput, "truncated checkpoint");
  json header;
  try {
    header = json::parse(bytes.substr(pos, hlen));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("checkpoint header: ") + e.what());
  }
  pos += hlen;
  std::uint64_t blen = read_u64(bytes, pos);
  if (pos + blen > bytes.size()) throw Error(ErrorCode::kMalformedInput, "truncated checkpoint");

  Checkpoint ckpt;
  try {
    ckpt.schema_version = header.at("schema_version").get<int>();
    if (ckpt.schema_version != kFeatureSchemaVersion)
      throw Error(ErrorCode::kVersionMismatch,
                  "checkpoint schema_version " + std::to_string(ckpt.schema_version) +
                      " does not match this build");
    ckpt.target = header.at("target").get<std::string>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.config_hash = header.at("config_hash").get<std::string>();
    ckpt.dataset_hash = header.at("dataset_hash").get<std::string>();
    ckpt.model_cfg = model_cfg_from_json(header.at("model_cfg"));
    for (const auto& e : header.at("history"))
      ckpt.history.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});

    std::map<std::string, Tensor2> loaded;
    for (const auto& jt : header.at("tensors")) {
      Tensor2 t(jt.at("rows").get<int>(), jt.at("cols").get<int>());
      for (double& d : t.data) {
        std::uint64_t bits = read_u64(bytes, pos);
        std::memcpy(&d, &bits, 8);
      }
      loaded[jt.at("name").get<std::string>()] = std::move(t);
    }

    const ModelConfig& m = ckpt.model_cfg;
    PredictorParams& p = ckpt.params;
    p.embedding = Tensor2(m.category_count, m.d_embed);
    p.encoder_w.assign(m.category_count, Tensor2());
    p.encoder_b.assign(m.category_count, Tensor2());
    p.gnn_w.assign(m.gnn_layers, Tensor2());
    p.gnn_b.assign(m.gnn_layers, Tensor2());
    p.head_w.assign(m.head_layers, Tensor2());
    p.head_b.assign(m.head_layers, Tensor2());
    for_each_param(p, [&](const std::string& name, Tensor2& t) {
      auto it = loaded.find(name);
      if (it == loaded.end())
        throw Error(ErrorCode::kMalformedInput, "checkpoint missing tensor '" + name + "'");
      t = std::move(it->second);
    });
    const Tensor2& mean = loaded.at("norm_mean");
    const Tensor2& stdev = loaded.at("norm_std");
    p.norm_stats.mean = mean.data;
    p.norm_stats.stdev = stdev.data;
    p.schema_version = ckpt.schema_version;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("checkpoint header: ") + e.what());
  }
  return ckpt;
}

double predict_sample(const Checkpoint& ckpt, const ModelGraph& graph) {
  FeaturizedGraph fg = featurize(graph);
  apply_norm(ckpt.params.norm_stats, &fg);
  return predict(ckpt.model_cfg, ckpt.params, fg);
}

}  // namespace perfsage
