// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "csv.hpp"
#include "json.hpp"
#include "molsets/error.hpp"
#include "molsets/log.hpp"
#include "molsets/rng.hpp"

namespace molsets::train {
namespace {

using json = nlohmann::json;
using ad::Var;

std::string molecule_key(const std::string& smiles, const std::optional<double>& mol_weight) {
  return smiles + '\n' + (mol_weight ? csv::format_double(*mol_weight) : std::string());
}

/// Embeds molecules on a tape at most once per pathway.
class EmbeddingCache {
 public:
  EmbeddingCache(const model::MolSetsModel& model, ad::ParameterBinding& bind, const PreparedDataset& dataset)
      : model_(model), bind_(bind), dataset_(dataset) {}

  Var get(model::Pathway pathway, std::size_t molecule) {
    const std::size_t key = molecule * 2 + (pathway == model::Pathway::Salt ? 1 : 0);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Var v = model_.embed_molecule(bind_, pathway, dataset_.molecules()[molecule]);
    cache_.emplace(key, v);
    return v;
  }

 private:
  const model::MolSetsModel& model_;
  ad::ParameterBinding& bind_;
  const PreparedDataset& dataset_;
  std::unordered_map<std::size_t, Var> cache_;
};

Var sample_forward(const model::MolSetsModel& model, ad::ParameterBinding& bind, EmbeddingCache& cache,
                   const PreparedDataset& dataset, const Sample& sample) {
  std::vector<std::size_t> order(sample.solvents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (model.config().variant != model::Variant::Concat) {
    std::vector<const chem::MolecularGraph*> graphs;
    for (std::size_t m : sample.solvents) graphs.push_back(&dataset.molecules()[m]);
    order = model::canonical_solvent_order(graphs, sample.weights);
  }
  std::vector<Var> reprs;
  std::vector<double> weights;
  for (std::size_t k : order) {
    reprs.push_back(cache.get(model::Pathway::Solvent, sample.solvents[k]));
    weights.push_back(sample.weights[k]);
  }
  Var salt = cache.get(model::Pathway::Salt, sample.salt);
  return model.forward(bind, reprs, weights, salt, sample.molality);
}

std::string format_lr(double lr) {
  std::ostringstream out;
  out << lr;
  return out.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ContractError("lr must be finite and >= 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ContractError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ContractError("eps must be positive");
  if (!(scheduler_factor > 0.0 && scheduler_factor <= 1.0)) throw ContractError("scheduler_factor must lie in (0, 1]");
  if (max_epochs == 0) throw ContractError("max_epochs must be positive");
  if (batch_size == 0) throw ContractError("batch_size must be positive");
}

TrainConfig train_config_from_json(std::string_view text) {
  TrainConfig config;
  if (text.empty()) return config;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw DataError("training configuration must be a JSON object");
    auto real = [&](const char* key, double& field) {
      if (j.contains(key)) field = j.at(key).get<double>();
    };
    auto count = [&](const char* key, std::size_t& field) {
      if (j.contains(key)) field = j.at(key).get<std::size_t>();
    };
    real("lr", config.lr);
    real("weight_decay", config.weight_decay);
    real("beta1", config.beta1);
    real("beta2", config.beta2);
    real("eps", config.eps);
    real("scheduler_factor", config.scheduler_factor);
    count("scheduler_patience", config.scheduler_patience);
    count("early_stop_patience", config.early_stop_patience);
    count("max_epochs", config.max_epochs);
    count("batch_size", config.batch_size);
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid training configuration: ") + e.what());
  }
  config.validate();
  return config;
}

PreparedDataset PreparedDataset::from_records(std::span<const data::MixtureRecord> records) {
  PreparedDataset dataset;
  std::map<std::string, std::size_t> index;
  auto intern = [&](const std::string& smiles, const std::optional<double>& mol_weight) {
    const std::string key = molecule_key(smiles, mol_weight);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    dataset.molecules_.push_back(chem::build_graph(smiles, mol_weight));
    index.emplace(key, dataset.molecules_.size() - 1);
    return dataset.molecules_.size() - 1;
  };
  for (const data::MixtureRecord& record : records) {
    try {
      record.validate();
      Sample sample;
      sample.mixture_id = record.mixture_id;
      for (std::size_t i = 0; i < record.solvent_smiles.size(); ++i) {
        const auto mw = record.mol_weight_overrides.empty() ? std::nullopt : record.mol_weight_overrides[i];
        sample.solvents.push_back(intern(record.solvent_smiles[i], mw));
      }
      sample.weights = record.weight_fractions;
      sample.salt = intern(record.salt_smiles, std::nullopt);
      sample.molality = record.molality;
      sample.target = data::conductivity_at_298k(record);
      dataset.samples_.push_back(std::move(sample));
    } catch (const DataError&) {
      throw;
    } catch (const Error& e) {
      throw DataError("mixture '" + record.mixture_id + "': " + e.what());
    }
  }
  return dataset;
}

model::MixtureInput PreparedDataset::mixture(std::size_t i) const {
  const Sample& s = samples_.at(i);
  model::MixtureInput mix;
  for (std::size_t k = 0; k < s.solvents.size(); ++k) mix.solvents.push_back({molecules_[s.solvents[k]], s.weights[k]});
  mix.salt = molecules_[s.salt];
  mix.molality = s.molality;
  return mix;
}

std::vector<double> PreparedDataset::targets() const {
  std::vector<double> out;
  for (const Sample& s : samples_) out.push_back(s.target);
  return out;
}

Var mse_loss(std::span<const Var> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw DimensionError("predictions and targets differ in length");
  if (preds.empty()) throw ContractError("mse_loss needs at least one prediction");
  Var stacked = ad::concat(preds, 0);
  ad::Tape& tape = *stacked.tape();
  Var target = tape.constant(ad::Tensor(stacked.shape(), std::vector<double>(targets.begin(), targets.end())));
  Var diff = ad::sub(stacked, target);
  return ad::scale(ad::sum_all(ad::mul(diff, diff)), 1.0 / static_cast<double>(preds.size()));
}

AdamWState make_adamw_state(const ad::ParameterSet& params, double lr) {
  AdamWState state;
  for (const auto& [name, tensor] : params) {
    state.first_moment.emplace(name, ad::Tensor::zeros(tensor.shape()));
    state.second_moment.emplace(name, ad::Tensor::zeros(tensor.shape()));
  }
  state.lr = lr;
  return state;
}

void adamw_step(AdamWState& state, ad::ParameterSet& params, const ad::GradientMap& grads,
                const TrainConfig& config) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, theta] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) throw ContractError("missing gradient for parameter '" + name + "'");
    if (!g->second.same_shape(theta)) throw DimensionError("gradient shape mismatch for '" + name + "'");
    ad::Tensor& m = state.first_moment.at(name);
    ad::Tensor& v = state.second_moment.at(name);
    auto th = theta.values();
    auto gv = g->second.values();
    auto mv = m.values();
    auto vv = v.values();
    for (std::size_t i = 0; i < th.size(); ++i) {
      mv[i] = config.beta1 * mv[i] + (1.0 - config.beta1) * gv[i];
      vv[i] = config.beta2 * vv[i] + (1.0 - config.beta2) * gv[i] * gv[i];
      const double m_hat = mv[i] / correction1;
      const double v_hat = vv[i] / correction2;
      th[i] -= state.lr * (m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * th[i]);
    }
  }
}

bool PlateauScheduler::update(double val_loss, double& lr) {
  if (val_loss < best_) {
    best_ = val_loss;
    num_bad_ = 0;
    return false;
  }
  if (++num_bad_ >= patience_) {
    lr *= factor_;
    num_bad_ = 0;
    return true;
  }
  return false;
}

EarlyStopDecision early_stopping(std::span<const double> val_losses, std::size_t patience) {
  if (val_losses.empty()) throw ContractError("early_stopping needs a non-empty history");
  EarlyStopDecision decision;
  decision.best_epoch = static_cast<std::size_t>(std::min_element(val_losses.begin(), val_losses.end()) -
                                                 val_losses.begin());
  const std::size_t bad = val_losses.size() - 1 - decision.best_epoch;
  decision.stop = bad > 0 && bad >= patience;
  return decision;
}

std::vector<double> predict_dataset_with(const model::MolSetsModel& model, const ad::ParameterSet& params,
                                         const PreparedDataset& dataset) {
  ad::Tape tape;
  ad::ParameterBinding bind(tape, params, false);
  EmbeddingCache cache(model, bind, dataset);
  std::vector<double> preds;
  preds.reserve(dataset.size());
  for (const Sample& sample : dataset.samples()) {
    preds.push_back(sample_forward(model, bind, cache, dataset, sample).value().item());
  }
  return preds;
}

std::vector<double> predict_dataset(const model::MolSetsModel& model, const PreparedDataset& dataset) {
  return predict_dataset_with(model, model.parameters(), dataset);
}

metrics::MetricsReport evaluate(const model::MolSetsModel& model, const PreparedDataset& dataset) {
  if (dataset.empty()) throw DataError("cannot evaluate on an empty dataset");
  const auto preds = predict_dataset(model, dataset);
  return metrics::evaluate_predictions(dataset.targets(), preds);
}

TrainResult train(const model::MolSetsModel& initial, const PreparedDataset& train_set,
                  const PreparedDataset& val_set, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  if (val_set.empty()) throw DataError("validation set is empty");

  const model::MolSetsModel& arch = initial;
  ad::ParameterSet params = initial.parameters();
  ad::ParameterSet best_params = params;
  AdamWState state = make_adamw_state(params, config.lr);
  PlateauScheduler scheduler(config.scheduler_factor, config.scheduler_patience);
  Rng rng(config.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto val_targets = val_set.targets();

  TrainResult result{initial, {}, 0, 0.0, false};
  std::vector<double> val_history;
  double best_val = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double epoch_lr = state.lr;
    rng.shuffle(std::span<std::size_t>(order));
    double squared_error = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      ad::Tape tape;
      ad::ParameterBinding bind(tape, params, true);
      EmbeddingCache cache(arch, bind, train_set);
      std::vector<Var> preds;
      std::vector<double> targets;
      for (std::size_t k = start; k < end; ++k) {
        const Sample& sample = train_set.samples()[order[k]];
        preds.push_back(sample_forward(arch, bind, cache, train_set, sample));
        targets.push_back(sample.target);
      }
      Var loss = mse_loss(preds, targets);
      const double loss_value = loss.value().item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index + 1) + ", lr " + format_lr(state.lr));
      }
      squared_error += loss_value * static_cast<double>(end - start);
      tape.backward(loss);
      adamw_step(state, params, bind.gradients(), config);
    }

    const auto val_preds = predict_dataset_with(arch, params, val_set);
    const double val_loss = metrics::mse(val_preds, val_targets);
    if (!std::isfinite(val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch) + ", lr " +
                         format_lr(state.lr));
    }
    EpochRecord record{epoch, squared_error / static_cast<double>(order.size()), val_loss, epoch_lr};
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = params;
      result.best_epoch = epoch;
    }
    val_history.push_back(val_loss);
    if (scheduler.update(val_loss, state.lr)) {
      log_info("epoch " + std::to_string(epoch) + ": lr reduced to " + format_lr(state.lr));
    }
    if (early_stopping(val_history, config.early_stop_patience).stop) {
      result.early_stopped = true;
      break;
    }
  }

  result.best_val_loss = best_val;
  result.model = model::MolSetsModel(initial.config(), std::move(best_params));
  return result;
}

void write_history(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,train_loss,val_loss,lr\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << csv::format_double(r.train_loss) << ',' << csv::format_double(r.val_loss) << ','
        << csv::format_double(r.lr) << '\n';
  }
}

void save_history(const std::string& path, std::span<const EpochRecord> history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write history '" + path + "'");
  write_history(out, history);
}

}  // namespace molsets::train
