#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "perfsage/ablation.hpp"
#include "perfsage/metrics.hpp"
#include "perfsage/rng.hpp"
#include "perfsage/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace perfsage;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMalformedInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMalformedInput, "cannot open '" + path + "' for writing");
  out << bytes;
}

// Either a JSON file on disk or a built-in preset: "cnn_small", "vit:paper".
DesignSpaceSpec load_space(const std::string& arg) {
  if (fs::exists(arg)) return spec_from_json(read_file(arg));
  std::string name = arg;
  ScalePreset preset = ScalePreset::kDesk;
  if (auto pos = arg.find(':'); pos != std::string::npos) {
    name = arg.substr(0, pos);
    std::string p = arg.substr(pos + 1);
    if (p == "paper")
      preset = ScalePreset::kPaper;
    else if (p != "desk")
      throw Error(ErrorCode::kMalformedInput, "preset suffix must be :desk or :paper");
  }
  return design_space_preset(name, preset);
}

void require_writable(const std::string& path, bool force) {
  if (!fs::exists(path)) return;
  if (force) return;
  throw Error(ErrorCode::kMalformedInput, "'" + path + "' exists; pass --force to overwrite");
}

std::vector<ModelGraph> load_graphs(const std::string& path) {
  std::vector<ModelGraph> graphs;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) graphs.push_back(parse_graph(read_file(f.string())));
  } else if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kMalformedInput, "cannot open '" + path + "'");
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) graphs.push_back(parse_graph(line));
  } else {
    graphs.push_back(parse_graph(read_file(path)));
  }
  if (graphs.empty()) throw Error(ErrorCode::kMalformedInput, "no graphs found at '" + path + "'");
  return graphs;
}

std::vector<OracleTarget> parse_targets(const std::string& list) {
  std::vector<OracleTarget> targets;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    OracleTarget t;
    if (!parse_oracle_target(item, &t))
      throw Error(ErrorCode::kMalformedInput, "unknown target '" + item + "'");
    targets.push_back(t);
  }
  if (targets.empty()) throw Error(ErrorCode::kMalformedInput, "no targets given");
  return targets;
}

std::map<OracleTarget, OracleConfig> parse_oracle_file(const std::string& path,
                                                       const std::vector<OracleTarget>& targets) {
  std::map<OracleTarget, OracleConfig> cfg_map;
  if (path.empty()) return cfg_map;
  std::string text = read_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kMalformedInput, "oracle config: invalid JSON");
  if (doc.contains("per_target")) {
    for (const auto& [name, sub] : doc["per_target"].items()) {
      OracleTarget t;
      if (!parse_oracle_target(name, &t))
        throw Error(ErrorCode::kMalformedInput, "unknown target '" + name + "' in oracle config");
      cfg_map[t] = oracle_config_from_json(sub.dump());
    }
  } else {
    for (OracleTarget t : targets) cfg_map[t] = oracle_config_from_json(text);
  }
  return cfg_map;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  if (seeds.empty()) throw Error(ErrorCode::kMalformedInput, "no seeds given");
  return seeds;
}

int run(int argc, char** argv) {
  CLI::App app{"sample, label, train and evaluate graph-level performance predictors"};
  app.require_subcommand(1);

  // sample
  auto* sample = app.add_subcommand("sample", "sample random model graphs from a design space");
  std::string sp_space, sp_out;
  int sp_n = 1;
  std::int64_t sp_seed = 0;
  bool sp_force = false;
  sample->add_option("--space", sp_space, "design space JSON file or preset name[:desk|:paper]")
      ->required();
  sample->add_option("--n", sp_n, "number of models")->required();
  sample->add_option("--seed", sp_seed, "first sampling seed");
  sample->add_option("--out", sp_out, "output .jsonl bundle or directory")->required();
  sample->add_flag("--force", sp_force, "overwrite existing output");
  sample->callback([&] {
    DesignSpaceSpec spec = load_space(sp_space);
    auto graphs = sample_dataset(spec, sp_n, sp_seed);
    if (sp_out.size() > 6 && sp_out.substr(sp_out.size() - 6) == ".jsonl") {
      require_writable(sp_out, sp_force);
      std::ostringstream bundle;
      for (const auto& g : graphs) bundle << serialize_graph(g) << "\n";
      write_file(sp_out, bundle.str());
    } else {
      if (fs::exists(sp_out) && !fs::is_directory(sp_out))
        throw Error(ErrorCode::kMalformedInput, "'" + sp_out + "' exists and is not a directory");
      fs::create_directories(sp_out);
      for (const auto& g : graphs) {
        fs::path file = fs::path(sp_out) / ("graph_" + std::to_string(g.seed) + ".json");
        require_writable(file.string(), sp_force);
        write_file(file.string(), serialize_graph(g));
      }
    }
    std::cout << "wrote " << graphs.size() << " graphs to " << sp_out << "\n";
  });

  // label
  auto* label = app.add_subcommand("label", "attach cost-oracle labels to sampled graphs");
  std::string lb_in, lb_oracle, lb_targets = "cpu_latency", lb_out;
  label->add_option("--in", lb_in, "graphs: .jsonl bundle, directory, or single .json")->required();
  label->add_option("--oracle", lb_oracle, "oracle config JSON (defaults when omitted)");
  label->add_option("--targets", lb_targets, "comma-separated target list");
  label->add_option("--out", lb_out, "output labeled .jsonl")->required();
  label->callback([&] {
    auto graphs = load_graphs(lb_in);
    auto targets = parse_targets(lb_targets);
    auto cfg_map = parse_oracle_file(lb_oracle, targets);
    auto samples = label_dataset(graphs, targets, cfg_map);
    write_labeled_jsonl(lb_out, samples);
    std::cout << "labeled " << samples.size() << " graphs -> " << lb_out << "\n";
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "train a predictor on a labeled dataset");
  std::string tr_data, tr_config, tr_out, tr_space, tr_test_out;
  train_cmd->add_option("--data", tr_data, "labeled .jsonl")->required();
  train_cmd->add_option("--config", tr_config, "train config JSON")->required();
  train_cmd->add_option("--out", tr_out, "output checkpoint path")->required();
  train_cmd->add_option("--space", tr_space, "restrict to one design space (specialized mode)");
  train_cmd->add_option("--test-out", tr_test_out, "write the held-out test split here");
  train_cmd->callback([&] {
    TrainConfig cfg = train_config_from_json(read_file(tr_config));
    auto samples = read_labeled_jsonl(tr_data);
    if (!tr_space.empty()) {
      std::erase_if(samples, [&](const LabeledSample& s) { return s.design_space != tr_space; });
      if (samples.empty())
        throw Error(ErrorCode::kInvalidArgument, "no samples from space '" + tr_space + "'");
    }
    if (cfg.mode == TrainMode::kSpecialized) {
      std::set<std::string> spaces;
      for (const auto& s : samples) spaces.insert(s.design_space);
      if (spaces.size() > 1)
        throw Error(ErrorCode::kInvalidArgument,
                    "specialized mode expects one design space; use --space to pick one");
    }
    auto [train_idx, test_idx] = split_dataset(samples, cfg.split_fraction, cfg.seed);
    std::vector<LabeledSample> train_set, test_set;
    for (size_t i : train_idx) train_set.push_back(samples[i]);
    for (size_t i : test_idx) test_set.push_back(samples[i]);
    Checkpoint ckpt = train_with_auto_val(cfg, train_set);
    save_checkpoint(ckpt, tr_out);
    if (!tr_test_out.empty()) write_labeled_jsonl(tr_test_out, test_set);

    json manifest = {{"config", json::parse(train_config_to_json(cfg))},
                     {"dataset_hash", hash_hex(dataset_hash(samples))},
                     {"train_ids", train_idx},
                     {"test_ids", test_idx},
                     {"epochs", json::array()}};
    for (const auto& e : ckpt.history)
      manifest["epochs"].push_back(
          {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_mape", e.val_mape}});
    write_file(tr_out + ".manifest.json", manifest.dump(2));
    std::cout << "checkpoint -> " << tr_out << " (" << ckpt.history.size() << " epochs)\n";
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a labeled dataset");
  std::string ev_ckpt, ev_data, ev_report;
  int ev_bins = 10;
  eval_cmd->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", ev_data, "labeled .jsonl")->required();
  eval_cmd->add_option("--report", ev_report, "output report JSON")->required();
  eval_cmd->add_option("--bins", ev_bins, "bin count for the binned error report");
  eval_cmd->callback([&] {
    Checkpoint ckpt = load_checkpoint(ev_ckpt);
    auto samples = read_labeled_jsonl(ev_data);
    EvalReport rep = evaluate(ckpt, samples, ev_bins);
    rep.checkpoint_hash = hash_hex(fnv1a(read_file(ev_ckpt)));
    write_file(ev_report, eval_report_to_json(rep));
    std::cout << eval_report_table(rep);
  });

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict one graph's target value");
  std::string pr_ckpt, pr_graph;
  predict_cmd->add_option("--ckpt", pr_ckpt, "checkpoint path")->required();
  predict_cmd->add_option("--graph", pr_graph, "graph JSON file")->required();
  predict_cmd->callback([&] {
    Checkpoint ckpt = load_checkpoint(pr_ckpt);
    ModelGraph g = parse_graph(read_file(pr_graph));
    OracleTarget t;
    const char* unit = parse_oracle_target(ckpt.target, &t) ? oracle_target_unit(t) : "";
    std::cout << predict_sample(ckpt, g) << " " << unit << "\n";
  });

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "run a cfe/dus/loss ablation study");
  std::string ab_kind, ab_config, ab_data, ab_seeds = "1,2,3", ab_out;
  ablate_cmd->add_option("--kind", ab_kind, "cfe | dus | loss")->required();
  ablate_cmd->add_option("--config", ab_config, "base train config JSON")->required();
  ablate_cmd->add_option("--data", ab_data, "labeled .jsonl")->required();
  ablate_cmd->add_option("--seeds", ab_seeds, "comma-separated training seeds");
  ablate_cmd->add_option("--out", ab_out, "output report JSON")->required();
  ablate_cmd->callback([&] {
    AblationKind kind;
    if (!parse_ablation_kind(ab_kind, &kind))
      throw Error(ErrorCode::kMalformedInput, "ablation kind must be cfe, dus, or loss");
    TrainConfig cfg = train_config_from_json(read_file(ab_config));
    auto samples = read_labeled_jsonl(ab_data);
    AblationReport rep = run_ablation(kind, cfg, samples, parse_seeds(ab_seeds));
    write_file(ab_out, ablation_report_to_json(rep));
    for (const auto& arm : rep.arms)
      std::cout << arm.name << ": median overall mape " << arm.median_overall * 100.0 << "%\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kDivergence: return 4;
      case ErrorCode::kVersionMismatch: return 5;
      default: return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
