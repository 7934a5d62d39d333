// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end over the C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "molsets/molsets.h"

namespace {

using json = nlohmann::json;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct DatasetDeleter {
  void operator()(ms_dataset* d) const { ms_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(ms_model* m) const { ms_model_free(m); }
};
using Dataset = std::unique_ptr<ms_dataset, DatasetDeleter>;
using Model = std::unique_ptr<ms_model, ModelDeleter>;

class Failure {
 public:
  explicit Failure(int code) : code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

int exit_code(ms_status status) {
  switch (status) {
    case MS_OK: return kOk;
    case MS_ERR_USAGE: return kUsage;
    case MS_ERR_NUMERIC: return kNumeric;
    default: return kData;
  }
}

void check(ms_status status) {
  if (status == MS_OK) return;
  std::cerr << "error: " << ms_status_name(status) << ": " << ms_last_error() << "\n";
  throw Failure(exit_code(status));
}

[[noreturn]] void usage_error(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  throw Failure(kUsage);
}

Dataset load(const std::string& path, bool lenient = false) {
  ms_dataset* d = nullptr;
  size_t skipped = 0;
  check(ms_dataset_load(path.c_str(), lenient ? 1 : 0, &d, &skipped));
  if (skipped > 0) std::cerr << "warning: skipped " << skipped << " malformed row(s) in " << path << "\n";
  return Dataset(d);
}

Model load_model(const std::string& path) {
  ms_model* m = nullptr;
  check(ms_model_load(path.c_str(), &m));
  return Model(m);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot open configuration '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "lr",         "weight_decay",       "beta1",         "beta2",      "eps",        "scheduler_factor",
      "scheduler_patience", "early_stop_patience", "max_epochs", "batch_size", "seed", "num_layers",
      "hidden_dim", "representation_dim", "attention_dim", "rho_hidden", "train_data", "val_data",
      "checkpoint_out", "history_out"};
  return keys;
}

std::string config_path_value(const json& config, const char* key) {
  if (!config.contains(key)) return {};
  if (!config.at(key).is_string()) usage_error(std::string("configuration key '") + key + "' must be a string");
  return config.at(key).get<std::string>();
}

struct Options {
  std::string smiles;
  std::string in, out, train, val, test, data, checkpoint, config, history, solvents, salts;
  std::string variant = "molsets";
  std::string conv = "graphconv";
  std::string ratios = "3,1,1";
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t threads = 1;
  double noise = 0.0;
  bool lenient = false;
  bool no_cache = false;
  bool quiet = false;
};

int run_featurize(const Options& o) {
  char* text = nullptr;
  check(ms_featurize(o.smiles.c_str(), &text));
  std::cout << text << "\n";
  ms_string_free(text);
  return kOk;
}

int run_prepare(const Options& o) {
  Dataset raw = load(o.in, o.lenient);
  ms_dataset* prepared = nullptr;
  size_t dropped = 0;
  check(ms_dataset_prepare(raw.get(), o.lenient ? 1 : 0, &prepared, &dropped));
  Dataset owned(prepared);
  if (dropped > 0) std::cerr << "warning: dropped " << dropped << " mixture(s) without a usable 298 K target\n";
  check(ms_dataset_save(owned.get(), o.out.c_str()));
  std::cerr << "prepared " << ms_dataset_size(owned.get()) << " mixtures -> " << o.out << "\n";
  return kOk;
}

int run_split(const Options& o) {
  double ratios[3];
  {
    std::istringstream in(o.ratios);
    std::string part;
    int k = 0;
    while (std::getline(in, part, ',')) {
      if (k >= 3) usage_error("--ratios needs exactly three values");
      try {
        std::size_t used = 0;
        ratios[k] = std::stod(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        usage_error("--ratios: '" + part + "' is not a number");
      }
      ++k;
    }
    if (k != 3) usage_error("--ratios needs exactly three values");
  }
  Dataset all = load(o.in);
  ms_dataset *tr = nullptr, *va = nullptr, *te = nullptr;
  check(ms_dataset_split(all.get(), ratios, o.seed, &tr, &va, &te));
  Dataset a(tr), b(va), c(te);
  check(ms_dataset_save(a.get(), o.train.c_str()));
  check(ms_dataset_save(b.get(), o.val.c_str()));
  check(ms_dataset_save(c.get(), o.test.c_str()));
  std::cerr << "split " << ms_dataset_size(all.get()) << " -> " << ms_dataset_size(a.get()) << "/"
            << ms_dataset_size(b.get()) << "/" << ms_dataset_size(c.get()) << "\n";
  return kOk;
}

int run_synth(const Options& o) {
  ms_dataset* d = nullptr;
  check(ms_dataset_synthesize(o.n, o.seed, o.noise, &d));
  Dataset owned(d);
  check(ms_dataset_save(owned.get(), o.out.c_str()));
  std::cerr << "wrote " << o.n << " synthetic mixtures -> " << o.out << "\n";
  return kOk;
}

int run_train(Options o) {
  const std::string text = read_text(o.config);
  json config;
  try {
    config = json::parse(text);
  } catch (const json::exception& e) {
    usage_error("configuration is not valid JSON: " + std::string(e.what()));
  }
  if (!config.is_object()) usage_error("configuration must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    if (!known_config_keys().count(key)) usage_error("unknown configuration key '" + key + "'");
  }
  if (o.train.empty()) o.train = config_path_value(config, "train_data");
  if (o.val.empty()) o.val = config_path_value(config, "val_data");
  if (o.out.empty()) o.out = config_path_value(config, "checkpoint_out");
  if (o.history.empty()) o.history = config_path_value(config, "history_out");
  if (o.train.empty() || o.val.empty() || o.out.empty()) {
    usage_error("train needs --train, --val and --out (or train_data, val_data, checkpoint_out in the config)");
  }

  Dataset train_data = load(o.train);
  Dataset val_data = load(o.val);
  ms_model* raw = nullptr;
  check(ms_model_create(text.c_str(), o.variant.c_str(), o.conv.c_str(), &raw));
  Model model(raw);
  ms_train_summary summary{};
  check(ms_model_train(model.get(), train_data.get(), val_data.get(), text.c_str(),
                       o.history.empty() ? nullptr : o.history.c_str(), &summary));
  check(ms_model_save(model.get(), o.out.c_str()));
  json out{{"epochs_run", summary.epochs_run},
           {"best_epoch", summary.best_epoch},
           {"best_val_loss", summary.best_val_loss},
           {"early_stopped", summary.early_stopped != 0},
           {"checkpoint", o.out}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int run_eval(const Options& o) {
  Model model = load_model(o.checkpoint);
  Dataset data = load(o.data);
  ms_metrics m{};
  check(ms_model_evaluate(model.get(), data.get(), &m));
  json out{{"pearson_rp", m.pearson_rp}, {"spearman_rs", m.spearman_rs}, {"mse", m.mse}, {"n", m.n}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int run_screen(const Options& o) {
  Model model = load_model(o.checkpoint);
  ms_screen_summary summary{};
  const ms_status status = ms_screen(model.get(), o.solvents.c_str(), o.salts.c_str(), o.out.c_str(), o.threads,
                                     o.no_cache ? 0 : 1, &summary);
  if (status == MS_PARTIAL) {
    std::cerr << "warning: " << ms_last_error() << "\n";
  } else {
    check(status);
  }
  std::cerr << "scored " << summary.num_scored << " of " << summary.num_candidates << " candidates -> " << o.out
            << "\n";
  return status == MS_PARTIAL ? kData : kOk;
}

int run_permute(const Options& o) {
  Model model = load_model(o.checkpoint);
  Dataset data = load(o.data);
  ms_permutation_report r{};
  check(ms_permutation_test(model.get(), data.get(), o.seed, &r));
  json out{{"num_tested", r.num_tested},
           {"num_skipped", r.num_skipped},
           {"max_abs_diff", r.max_abs_diff},
           {"mean_abs_diff", r.mean_abs_diff},
           {"fraction_changed", r.fraction_changed}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int run_export(const Options& o) {
  Model model = load_model(o.checkpoint);
  Dataset data = load(o.data);
  check(ms_model_export_representations(model.get(), data.get(), o.out.c_str()));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MolSets: conductivity prediction for electrolyte mixtures"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("-q,--quiet", o.quiet, "Only report errors");

  auto* featurize = app.add_subcommand("featurize", "Print the molecular graph of a SMILES string as JSON");
  featurize->add_option("smiles", o.smiles, "SMILES string")->required();

  auto* prepare = app.add_subcommand("prepare", "Reduce each mixture to its 298 K conductivity");
  prepare->add_option("--in", o.in, "Raw dataset CSV")->required();
  prepare->add_option("--out", o.out, "Prepared dataset CSV")->required();
  prepare->add_flag("--lenient", o.lenient, "Skip malformed rows instead of failing");

  auto* split = app.add_subcommand("split", "Seeded train/validation/test split");
  split->add_option("--in", o.in, "Dataset CSV")->required();
  split->add_option("--train", o.train, "Training output CSV")->required();
  split->add_option("--val", o.val, "Validation output CSV")->required();
  split->add_option("--test", o.test, "Test output CSV")->required();
  split->add_option("--seed", o.seed, "Shuffle seed")->required();
  split->add_option("--ratios", o.ratios, "Comma-separated ratios")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with a known target function");
  synth->add_option("--n", o.n, "Number of mixtures")->required();
  synth->add_option("--seed", o.seed, "Generator seed")->required();
  synth->add_option("--noise", o.noise, "Standard deviation of target noise")->capture_default_str();
  synth->add_option("--out", o.out, "Output CSV")->required();

  auto* train = app.add_subcommand("train", "Train a model and write its checkpoint");
  train->add_option("--config", o.config, "JSON configuration")->required();
  train->add_option("--variant", o.variant, "molsets, wsum or concat")
      ->check(CLI::IsMember({"molsets", "wsum", "concat"}))
      ->capture_default_str();
  train->add_option("--conv", o.conv, "graphconv, sageconv, gcnconv, gatconv or dmpnn")
      ->check(CLI::IsMember({"graphconv", "sageconv", "gcnconv", "gatconv", "dmpnn"}))
      ->capture_default_str();
  train->add_option("--train", o.train, "Training CSV");
  train->add_option("--val", o.val, "Validation CSV");
  train->add_option("--out", o.out, "Checkpoint output");
  train->add_option("--history", o.history, "History CSV output");

  auto* eval = app.add_subcommand("eval", "Print metrics of a checkpoint on a dataset as JSON");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
  eval->add_option("--data", o.data, "Dataset CSV")->required();

  auto* screen = app.add_subcommand("screen", "Rank equal-weight binary mixtures");
  screen->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
  screen->add_option("--solvents", o.solvents, "Solvent SMILES, one per line")->required();
  screen->add_option("--salts", o.salts, "Salt SMILES, one per line")->required();
  screen->add_option("--out", o.out, "Ranked CSV output")->required();
  screen->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
  screen->add_flag("--no-cache", o.no_cache, "Recompute molecule embeddings per candidate");

  auto* permute = app.add_subcommand("permute-test", "Compare predictions before and after reordering solvents");
  permute->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
  permute->add_option("--data", o.data, "Dataset CSV")->required();
  permute->add_option("--seed", o.seed, "Permutation seed")->capture_default_str();

  auto* exportr = app.add_subcommand("export-reprs", "Write solvent-mixture representations as CSV");
  exportr->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
  exportr->add_option("--data", o.data, "Dataset CSV")->required();
  exportr->add_option("--out", o.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  ms_set_log_level(o.quiet ? MS_LOG_ERROR : MS_LOG_WARNING);
  try {
    if (featurize->parsed()) return run_featurize(o);
    if (prepare->parsed()) return run_prepare(o);
    if (split->parsed()) return run_split(o);
    if (synth->parsed()) return run_synth(o);
    if (train->parsed()) return run_train(o);
    if (eval->parsed()) return run_eval(o);
    if (screen->parsed()) return run_screen(o);
    if (permute->parsed()) return run_permute(o);
    if (exportr->parsed()) return run_export(o);
  } catch (const Failure& f) {
    return f.code();
  }
  return kUsage;
}
