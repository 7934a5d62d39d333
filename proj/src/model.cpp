// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "molsets/error.hpp"

namespace molsets::model {

using ad::Var;
using nlohmann::json;

namespace {

const char* pathway_prefix(Pathway pathway) { return pathway == Pathway::Solvent ? "phi_solvent" : "phi_salt"; }

std::string rho_layer(std::size_t k) { return "rho.layer" + std::to_string(k); }

void check_repr_inputs(std::span<const Var> reprs, std::span<const double> weights) {
  if (reprs.empty()) throw ContractError("mixture aggregation needs at least one molecule");
  if (reprs.size() != weights.size()) throw ContractError("one weight fraction per molecule required");
}

Var weight_row(ad::Tape& tape, std::span<const double> weights) {
  return tape.constant(ad::Tensor({1, weights.size()}, std::vector<double>(weights.begin(), weights.end())));
}

json gnn_to_json(const gnn::GnnConfig& c) {
  std::string conv(gnn::to_string(c.kind));
  std::transform(conv.begin(), conv.end(), conv.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return {{"conv", conv},
          {"num_layers", c.num_layers},
          {"hidden_dim", c.hidden_dim},
          {"representation_dim", c.representation_dim}};
}

gnn::GnnConfig gnn_from_json(const json& j, gnn::GnnConfig base) {
  if (j.contains("conv")) {
    auto kind = gnn::conv_kind_from_string(j.at("conv").get<std::string>());
    if (!kind) throw DataError("unknown convolution kind '" + j.at("conv").get<std::string>() + "'");
    if (*kind != base.kind) base = gnn::default_config(*kind);
  }
  if (j.contains("num_layers")) base.num_layers = j.at("num_layers").get<std::size_t>();
  if (j.contains("hidden_dim")) base.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  if (j.contains("representation_dim")) base.representation_dim = j.at("representation_dim").get<std::size_t>();
  return base;
}

json config_json(const ModelConfig& config) {
  return {{"variant", std::string(to_string(config.variant))},
          {"solvent_gnn", gnn_to_json(config.solvent_gnn)},
          {"salt_gnn", gnn_to_json(config.salt_gnn)},
          {"attention_dim", config.attention_dim},
          {"rho_hidden", config.rho_hidden},
          {"max_solvents", config.max_solvents},
          {"seed", config.seed}};
}

ModelConfig config_from(const json& j) {
  ModelConfig config;
  if (j.contains("variant")) {
    auto v = variant_from_string(j.at("variant").get<std::string>());
    if (!v) throw DataError("unknown model variant '" + j.at("variant").get<std::string>() + "'");
    config.variant = *v;
  }
  if (j.contains("solvent_gnn")) {
    config.solvent_gnn = gnn_from_json(j.at("solvent_gnn"), config.solvent_gnn);
    config.attention_dim = gnn::default_attention_dim(config.solvent_gnn.kind);
    config.salt_gnn = config.solvent_gnn;
  }
  if (j.contains("salt_gnn")) config.salt_gnn = gnn_from_json(j.at("salt_gnn"), config.salt_gnn);
  if (j.contains("attention_dim")) config.attention_dim = j.at("attention_dim").get<std::size_t>();
  if (j.contains("rho_hidden")) config.rho_hidden = j.at("rho_hidden").get<std::vector<std::size_t>>();
  if (j.contains("max_solvents")) config.max_solvents = j.at("max_solvents").get<std::size_t>();
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  config.solvent_gnn.seed = config.seed;
  config.salt_gnn.seed = config.seed;
  return config;
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::MolSets: return "molsets";
    case Variant::WeightedSum: return "wsum";
    case Variant::Concat: return "concat";
  }
  return "unknown";
}

std::optional<Variant> variant_from_string(std::string_view name) {
  if (name == "molsets") return Variant::MolSets;
  if (name == "wsum") return Variant::WeightedSum;
  if (name == "concat") return Variant::Concat;
  return std::nullopt;
}

ModelConfig ModelConfig::defaults(gnn::ConvKind kind, Variant variant) {
  ModelConfig config;
  config.variant = variant;
  config.solvent_gnn = gnn::default_config(kind);
  config.salt_gnn = gnn::default_config(kind);
  config.attention_dim = gnn::default_attention_dim(kind);
  return config;
}

std::size_t ModelConfig::rho_input_dim() const {
  const std::size_t salt = salt_gnn.representation_dim;
  if (variant == Variant::Concat) {
    return max_solvents * solvent_gnn.representation_dim + max_solvents + salt + 1;
  }
  return solvent_gnn.representation_dim + salt + 1;
}

void ModelConfig::validate() const {
  solvent_gnn.validate();
  salt_gnn.validate();
  if (attention_dim < 1) throw ContractError("attention dimension must be positive");
  if (max_solvents < 1) throw ContractError("max_solvents must be positive");
  for (std::size_t width : rho_hidden) {
    if (width < 1) throw ContractError("rho hidden widths must be positive");
  }
}

void MixtureInput::validate(std::size_t max_solvents) const {
  if (solvents.empty()) throw ContractError("a mixture needs at least one solvent");
  if (solvents.size() > max_solvents) {
    throw ContractError("mixture has " + std::to_string(solvents.size()) + " solvents, at most " +
                        std::to_string(max_solvents) + " supported");
  }
  double total = 0.0;
  for (const Constituent& c : solvents) {
    if (!(c.weight >= 0.0 && c.weight <= 1.0)) throw ContractError("weight fractions must lie in [0, 1]");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw ContractError("weight fractions sum to " + std::to_string(total) + ", expected 1");
  }
  if (!(molality >= 0.0) || !std::isfinite(molality)) throw ContractError("molality must be finite and >= 0");
}

ad::ParameterSet init_parameters(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ad::ParameterSet params;
  for (Pathway pathway : {Pathway::Solvent, Pathway::Salt}) {
    const auto& gnn_config = pathway == Pathway::Solvent ? config.solvent_gnn : config.salt_gnn;
    const std::string prefix = pathway_prefix(pathway);
    gnn::init_gnn(params, prefix, gnn_config, chem::kNodeFeatureDim, rng);
    gnn::init_dense(params, prefix + ".readout", gnn_config.hidden_dim + 1, gnn_config.representation_dim, rng);
  }
  if (config.variant == Variant::MolSets) {
    const std::size_t r = config.solvent_gnn.representation_dim;
    const std::size_t dk = config.attention_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(r));
    for (const auto& [name, cols] : {std::pair{"attention.WQ", dk}, {"attention.WK", dk}, {"attention.WV", r}}) {
      ad::Tensor w = ad::Tensor::zeros({r, cols});
      for (double& v : w.values()) v = rng.uniform(-bound, bound);
      params[name] = std::move(w);
    }
  }
  std::size_t width = config.rho_input_dim();
  for (std::size_t k = 0; k < config.rho_hidden.size(); ++k) {
    gnn::init_dense(params, rho_layer(k), width, config.rho_hidden[k], rng);
    width = config.rho_hidden[k];
  }
  gnn::init_dense(params, rho_layer(config.rho_hidden.size()), width, 1, rng);
  return params;
}

MolSetsModel::MolSetsModel(ModelConfig config) : config_(std::move(config)), params_(init_parameters(config_)) {}

MolSetsModel::MolSetsModel(ModelConfig config, ad::ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  const ad::ParameterSet layout = init_parameters(config_);
  if (layout.size() != params_.size()) {
    throw DimensionError("parameter set has " + std::to_string(params_.size()) + " tensors, configuration expects " +
                         std::to_string(layout.size()));
  }
  for (const auto& [name, tensor] : layout) {
    auto it = params_.find(name);
    if (it == params_.end()) throw DimensionError("missing parameter '" + name + "'");
    if (!it->second.same_shape(tensor)) {
      throw DimensionError("parameter '" + name + "' has shape " + it->second.shape_string() + ", expected " +
                           tensor.shape_string());
    }
  }
}

Var MolSetsModel::embed_molecule(ad::ParameterBinding& bind, Pathway pathway,
                                 const chem::MolecularGraph& graph) const {
  if (graph.num_nodes() == 0) throw ContractError("cannot embed an empty graph");
  const auto& gnn_config = pathway == Pathway::Solvent ? config_.solvent_gnn : config_.salt_gnn;
  const std::string prefix = pathway_prefix(pathway);
  Var nodes = gnn::gnn_node_embeddings(bind, prefix, gnn_config, graph);
  Var pooled = gnn::global_mean_pool(nodes);
  Var log_m = bind.tape().constant(ad::Tensor({1, 1}, {graph.log_mol_weight()}));
  return gnn::dense_forward(bind, prefix + ".readout", ad::concat({pooled, log_m}, 1), gnn::Activation::None);
}

Var MolSetsModel::aggregate_attention(ad::ParameterBinding& bind, std::span<const Var> reprs,
                                      std::span<const double> weights) const {
  check_repr_inputs(reprs, weights);
  Var wq = bind("attention.WQ");
  Var wk = bind("attention.WK");
  Var wv = bind("attention.WV");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(wk.value().shape()[1]));
  Var stacked = ad::concat(reprs, 0);
  Var logits = ad::scale(ad::sum(ad::mul(ad::matmul(stacked, wq), ad::matmul(stacked, wk)), 1), inv_sqrt_dk);
  Var scores = ad::softmax(logits);
  Var updated = ad::scale_rows(ad::matmul(stacked, wv), scores);
  return ad::matmul(weight_row(bind.tape(), weights), updated);
}

Var MolSetsModel::aggregate_weighted_sum(ad::ParameterBinding& bind, std::span<const Var> reprs,
                                         std::span<const double> weights) const {
  check_repr_inputs(reprs, weights);
  return ad::matmul(weight_row(bind.tape(), weights), ad::concat(reprs, 0));
}

Var MolSetsModel::concat_representations(ad::ParameterBinding& bind, std::span<const Var> reprs,
                                         std::span<const double> weights) const {
  check_repr_inputs(reprs, weights);
  if (reprs.size() > config_.max_solvents) {
    throw ContractError("concat variant supports at most " + std::to_string(config_.max_solvents) + " solvents");
  }
  ad::Tape& tape = bind.tape();
  std::vector<Var> parts(reprs.begin(), reprs.end());
  const std::size_t pads = config_.max_solvents - reprs.size();
  if (pads > 0) parts.push_back(tape.constant(ad::Tensor::zeros({1, pads * config_.solvent_gnn.representation_dim})));
  std::vector<double> padded_weights(weights.begin(), weights.end());
  padded_weights.resize(config_.max_solvents, 0.0);
  parts.push_back(weight_row(tape, padded_weights));
  return ad::concat(parts, 1);
}

Var MolSetsModel::mixture_representation(ad::ParameterBinding& bind, std::span<const Var> reprs,
                                         std::span<const double> weights) const {
  switch (config_.variant) {
    case Variant::MolSets: return aggregate_attention(bind, reprs, weights);
    case Variant::WeightedSum: return aggregate_weighted_sum(bind, reprs, weights);
    case Variant::Concat: return concat_representations(bind, reprs, weights);
  }
  throw ContractError("unknown variant");
}

Var MolSetsModel::transform_head(ad::ParameterBinding& bind, Var mixture_repr, Var salt_repr, double molality) const {
  Var m = bind.tape().constant(ad::Tensor({1, 1}, {molality}));
  Var h = ad::concat({mixture_repr, salt_repr, m}, 1);
  const std::size_t layers = config_.rho_hidden.size() + 1;
  for (std::size_t k = 0; k < layers; ++k) {
    h = gnn::dense_forward(bind, rho_layer(k), h, k + 1 < layers ? gnn::Activation::Relu : gnn::Activation::None);
  }
  return h;
}

Var MolSetsModel::forward(ad::ParameterBinding& bind, std::span<const Var> solvent_reprs,
                          std::span<const double> weights, Var salt_repr, double molality) const {
  return transform_head(bind, mixture_representation(bind, solvent_reprs, weights), salt_repr, molality);
}

std::vector<std::size_t> canonical_solvent_order(std::span<const chem::MolecularGraph* const> graphs,
                                                 std::span<const double> weights) {
  if (graphs.size() != weights.size()) throw DimensionError("solvent graphs and weights differ in length");
  std::vector<std::size_t> index(graphs.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::stable_sort(index.begin(), index.end(), [&](std::size_t a, std::size_t b) {
    const auto& ga = *graphs[a];
    const auto& gb = *graphs[b];
    if (ga.source_smiles() != gb.source_smiles()) return ga.source_smiles() < gb.source_smiles();
    if (ga.log_mol_weight() != gb.log_mol_weight()) return ga.log_mol_weight() < gb.log_mol_weight();
    return weights[a] < weights[b];
  });
  return index;
}

std::vector<std::size_t> MolSetsModel::evaluation_order(const MixtureInput& mix, SolventOrder order) const {
  if (order == SolventOrder::Canonical && config_.variant != Variant::Concat) {
    std::vector<const chem::MolecularGraph*> graphs;
    std::vector<double> weights;
    for (const Constituent& c : mix.solvents) {
      graphs.push_back(&c.graph);
      weights.push_back(c.weight);
    }
    return canonical_solvent_order(graphs, weights);
  }
  std::vector<std::size_t> index(mix.solvents.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  return index;
}

double MolSetsModel::predict(const MixtureInput& mix, SolventOrder order) const {
  return predict_with(params_, mix, order);
}

double MolSetsModel::predict_with(const ad::ParameterSet& params, const MixtureInput& mix, SolventOrder order) const {
  mix.validate(config_.max_solvents);
  ad::Tape tape;
  ad::ParameterBinding bind(tape, params, false);
  std::vector<Var> reprs;
  std::vector<double> weights;
  for (std::size_t i : evaluation_order(mix, order)) {
    reprs.push_back(embed_molecule(bind, Pathway::Solvent, mix.solvents[i].graph));
    weights.push_back(mix.solvents[i].weight);
  }
  Var salt = embed_molecule(bind, Pathway::Salt, mix.salt);
  return forward(bind, reprs, weights, salt, mix.molality).value().item();
}

std::vector<double> MolSetsModel::export_representation(const MixtureInput& mix) const {
  mix.validate(config_.max_solvents);
  ad::Tape tape;
  ad::ParameterBinding bind(tape, params_, false);
  std::vector<Var> reprs;
  std::vector<double> weights;
  for (std::size_t i : evaluation_order(mix, SolventOrder::Canonical)) {
    reprs.push_back(embed_molecule(bind, Pathway::Solvent, mix.solvents[i].graph));
    weights.push_back(mix.solvents[i].weight);
  }
  const auto values = mixture_representation(bind, reprs, weights).value().values();
  return {values.begin(), values.end()};
}

std::string config_to_json(const ModelConfig& config) { return config_json(config).dump(2); }

ModelConfig config_from_json(std::string_view text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model configuration: ") + e.what());
  }
}

ModelConfig config_from_settings(std::string_view flat_json, gnn::ConvKind kind, Variant variant) {
  ModelConfig config = ModelConfig::defaults(kind, variant);
  if (flat_json.empty()) return config;
  try {
    const json j = json::parse(flat_json);
    if (!j.is_object()) throw DataError("configuration must be a JSON object");
    auto set_both = [&](const char* key, std::size_t gnn::GnnConfig::*field) {
      if (!j.contains(key)) return;
      const auto value = j.at(key).get<std::size_t>();
      config.solvent_gnn.*field = value;
      config.salt_gnn.*field = value;
    };
    set_both("num_layers", &gnn::GnnConfig::num_layers);
    set_both("hidden_dim", &gnn::GnnConfig::hidden_dim);
    set_both("representation_dim", &gnn::GnnConfig::representation_dim);
    if (j.contains("attention_dim")) config.attention_dim = j.at("attention_dim").get<std::size_t>();
    if (j.contains("rho_hidden")) config.rho_hidden = j.at("rho_hidden").get<std::vector<std::size_t>>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid configuration: ") + e.what());
  }
  config.solvent_gnn.seed = config.seed;
  config.salt_gnn.seed = config.seed;
  config.validate();
  return config;
}

std::string checkpoint_to_json(const MolSetsModel& model) {
  json doc;
  doc["format"] = "molsets-checkpoint";
  doc["config"] = config_json(model.config());
  doc["feature_schema_version"] = chem::kFeatureSchemaVersion;
  doc["seed"] = model.config().seed;
  json params = json::object();
  for (const auto& [name, tensor] : model.parameters()) {
    params[name] = {{"shape", tensor.shape()},
                    {"values", std::vector<double>(tensor.values().begin(), tensor.values().end())}};
  }
  doc["parameters"] = std::move(params);
  return doc.dump(1);
}

MolSetsModel checkpoint_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const int schema = doc.at("feature_schema_version").get<int>();
    if (schema != chem::kFeatureSchemaVersion) {
      throw DataError("checkpoint feature schema version " + std::to_string(schema) + " is not supported");
    }
    ModelConfig config = config_from(doc.at("config"));
    ad::ParameterSet params;
    for (const auto& [name, entry] : doc.at("parameters").items()) {
      params.emplace(name, ad::Tensor(entry.at("shape").get<std::vector<std::size_t>>(),
                                      entry.at("values").get<std::vector<double>>()));
    }
    return MolSetsModel(std::move(config), std::move(params));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const MolSetsModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(model) << '\n';
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

MolSetsModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace molsets::model
