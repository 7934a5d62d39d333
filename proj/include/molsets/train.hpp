// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molsets/autodiff.hpp"
#include "molsets/chem_graph.hpp"
#include "molsets/data.hpp"
#include "molsets/metrics.hpp"
#include "molsets/model.hpp"

namespace molsets::train {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double scheduler_factor = 0.5;
  std::size_t scheduler_patience = 10;
  std::size_t early_stop_patience = 20;
  std::size_t max_epochs = 1000;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reads the flat keys lr, weight_decay, beta1, beta2, eps, scheduler_factor,
/// scheduler_patience, early_stop_patience, max_epochs, batch_size and seed.
/// Other keys are ignored.
TrainConfig train_config_from_json(std::string_view text);

/// One mixture with its solvents referring into the molecule table.
struct Sample {
  std::string mixture_id;
  std::vector<std::size_t> solvents;
  std::vector<double> weights;
  std::size_t salt = 0;
  double molality = 0.0;
  double target = 0.0;
};

/// Records converted to graphs once; identical (SMILES, molecular weight)
/// pairs share one table entry.
class PreparedDataset {
 public:
  PreparedDataset() = default;
  /// Targets come from data::conductivity_at_298k.
  static PreparedDataset from_records(std::span<const data::MixtureRecord> records);

  const std::vector<chem::MolecularGraph>& molecules() const { return molecules_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  model::MixtureInput mixture(std::size_t i) const;
  std::vector<double> targets() const;

 private:
  std::vector<chem::MolecularGraph> molecules_;
  std::vector<Sample> samples_;
};

/// Mean squared error of taped predictions against constant targets.
ad::Var mse_loss(std::span<const ad::Var> preds, std::span<const double> targets);

struct AdamWState {
  ad::ParameterSet first_moment;
  ad::ParameterSet second_moment;
  std::size_t step = 0;
  double lr = 1e-3;
};

AdamWState make_adamw_state(const ad::ParameterSet& params, double lr);

/// theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
void adamw_step(AdamWState& state, ad::ParameterSet& params, const ad::GradientMap& grads,
                const TrainConfig& config);

/// Multiplies the lr by `factor` after `patience` consecutive epochs without a
/// strict decrease of the best validation loss, then restarts the count.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, std::size_t patience) : factor_(factor), patience_(patience) {}
  /// Returns true if the lr was reduced.
  bool update(double val_loss, double& lr);
  std::size_t num_bad_epochs() const { return num_bad_; }

 private:
  double factor_;
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t num_bad_ = 0;
};

struct EarlyStopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;  // index into the history
};

/// Stops once the last `patience` (and at least one) epochs failed to improve
/// on the minimum. The first occurrence of the minimum is the best epoch.
EarlyStopDecision early_stopping(std::span<const double> val_losses, std::size_t patience);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // lr used during the epoch
};

struct TrainResult {
  model::MolSetsModel model;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
  bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded shuffling, minibatch AdamW updates, per-epoch validation feeding
/// the plateau scheduler and early stopping. Throws NumericError on a
/// non-finite loss.
TrainResult train(const model::MolSetsModel& initial, const PreparedDataset& train_set,
                  const PreparedDataset& val_set, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Predictions in sample order; each molecule is embedded once per call.
std::vector<double> predict_dataset(const model::MolSetsModel& model, const PreparedDataset& dataset);
std::vector<double> predict_dataset_with(const model::MolSetsModel& model, const ad::ParameterSet& params,
                                         const PreparedDataset& dataset);

metrics::MetricsReport evaluate(const model::MolSetsModel& model, const PreparedDataset& dataset);

/// CSV with columns epoch, train_loss, val_loss, lr.
void write_history(std::ostream& out, std::span<const EpochRecord> history);
void save_history(const std::string& path, std::span<const EpochRecord> history);

}  // namespace molsets::train
