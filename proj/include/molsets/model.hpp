// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molsets/autodiff.hpp"
#include "molsets/chem_graph.hpp"
#include "molsets/gnn.hpp"

namespace molsets::model {

/// Full model, and the two ablations: attention replaced by a plain weighted
/// sum, and the order-dependent concatenation of zero-padded representations.
enum class Variant { MolSets, WeightedSum, Concat };

std::string_view to_string(Variant variant);
/// "molsets", "wsum" or "concat".
std::optional<Variant> variant_from_string(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::MolSets;
  gnn::GnnConfig solvent_gnn = gnn::default_config(gnn::ConvKind::GraphConv);
  gnn::GnnConfig salt_gnn = gnn::default_config(gnn::ConvKind::GraphConv);
  std::size_t attention_dim = 16;
  std::vector<std::size_t> rho_hidden = {32, 16};
  std::size_t max_solvents = 4;
  std::uint64_t seed = 0;

  /// Tuned defaults for a convolution kind, shared by both pathways.
  static ModelConfig defaults(gnn::ConvKind kind, Variant variant = Variant::MolSets);

  std::size_t rho_input_dim() const;
  void validate() const;
};

struct Constituent {
  chem::MolecularGraph graph;
  double weight = 1.0;
};

/// 1 to max_solvents solvents with weight fractions summing to 1, one salt
/// graph and its molality in mol/kg.
struct MixtureInput {
  std::vector<Constituent> solvents;
  chem::MolecularGraph salt;
  double molality = 0.0;

  void validate(std::size_t max_solvents) const;
};

inline constexpr double kWeightSumTolerance = 1e-6;

enum class Pathway { Solvent, Salt };

/// Evaluation order of the solvent set. Canonical sorts by SMILES text (then
/// weight) so repeated runs are bit-identical; AsGiven keeps the caller's
/// order and is what the invariance tests exercise. The Concat variant always
/// uses the given order.
enum class SolventOrder { Canonical, AsGiven };

class MolSetsModel {
 public:
  /// Random initialization from `config.seed`.
  explicit MolSetsModel(ModelConfig config);
  /// Adopts existing parameters; names and shapes must match `config`.
  MolSetsModel(ModelConfig config, ad::ParameterSet params);

  const ModelConfig& config() const { return config_; }
  const ad::ParameterSet& parameters() const { return params_; }
  ad::ParameterSet& parameters() { return params_; }

  /// Predicted log10 conductivity (S/cm).
  double predict(const MixtureInput& mix, SolventOrder order = SolventOrder::Canonical) const;
  /// Same as predict() but evaluated with an arbitrary parameter set of this layout.
  double predict_with(const ad::ParameterSet& params, const MixtureInput& mix,
                      SolventOrder order = SolventOrder::Canonical) const;

  /// Solvent-mixture representation fed to the head (the attention-weighted
  /// sum for MolSets, the weighted sum for WeightedSum, the padded
  /// concatenation for Concat).
  std::vector<double> export_representation(const MixtureInput& mix) const;

  // Taped building blocks, shared by inference and training.

  /// z = dense(mean_pool(conv_stack(graph)) ++ [log M]), shape 1 x representation_dim.
  ad::Var embed_molecule(ad::ParameterBinding& bind, Pathway pathway, const chem::MolecularGraph& graph) const;
  /// Attention aggregation: per-molecule scalar logits q.k / sqrt(d_k), softmax
  /// across the set, Z = sum_i w_i * score_i * (z_i W^V). Shape 1 x representation_dim.
  ad::Var aggregate_attention(ad::ParameterBinding& bind, std::span<const ad::Var> reprs,
                              std::span<const double> weights) const;
  ad::Var aggregate_weighted_sum(ad::ParameterBinding& bind, std::span<const ad::Var> reprs,
                                 std::span<const double> weights) const;
  /// [z_1 .. z_m, zero pads, w_1 .. w_m, zero pads]
  ad::Var concat_representations(ad::ParameterBinding& bind, std::span<const ad::Var> reprs,
                                 std::span<const double> weights) const;
  /// Solvent-side mixture representation for the configured variant.
  ad::Var mixture_representation(ad::ParameterBinding& bind, std::span<const ad::Var> reprs,
                                 std::span<const double> weights) const;
  /// Dense stack on [Z ++ z_salt ++ molality]; relu hidden layers, linear output. Shape 1 x 1.
  ad::Var transform_head(ad::ParameterBinding& bind, ad::Var mixture_repr, ad::Var salt_repr, double molality) const;
  /// Head applied to precomputed solvent/salt embeddings, in the order given.
  ad::Var forward(ad::ParameterBinding& bind, std::span<const ad::Var> solvent_reprs, std::span<const double> weights,
                  ad::Var salt_repr, double molality) const;

  /// Index order in which `mix.solvents` are evaluated.
  std::vector<std::size_t> evaluation_order(const MixtureInput& mix, SolventOrder order) const;

 private:
  ModelConfig config_;
  ad::ParameterSet params_;
};

/// Sort order by (SMILES text, log M, weight); stable for exact duplicates.
std::vector<std::size_t> canonical_solvent_order(std::span<const chem::MolecularGraph* const> graphs,
                                                 std::span<const double> weights);

/// Parameter layout (names and shapes) of a configuration, randomly initialized.
ad::ParameterSet init_parameters(const ModelConfig& config);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(std::string_view text);

/// Defaults for `kind` overridden by the flat keys num_layers, hidden_dim,
/// representation_dim (both pathways), attention_dim, rho_hidden and seed.
/// Other keys are ignored.
ModelConfig config_from_settings(std::string_view flat_json, gnn::ConvKind kind, Variant variant);

/// Checkpoint document: config, feature schema version, seed and every
/// parameter tensor keyed by layer path. Doubles are written in shortest
/// round-trip form, so save/load is bit-exact.
std::string checkpoint_to_json(const MolSetsModel& model);
MolSetsModel checkpoint_from_json(std::string_view text);
void save_checkpoint(const MolSetsModel& model, const std::string& path);
MolSetsModel load_checkpoint(const std::string& path);

}  // namespace molsets::model
