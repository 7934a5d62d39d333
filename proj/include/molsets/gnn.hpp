// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "molsets/autodiff.hpp"
#include "molsets/chem_graph.hpp"
#include "molsets/rng.hpp"

namespace molsets::gnn {

enum class ConvKind { GraphConv, SAGEConv, GCNConv, GATConv, DMPNN };

std::string_view to_string(ConvKind kind);
/// Accepts the lower-case CLI spelling ("graphconv") as well as the canonical name.
std::optional<ConvKind> conv_kind_from_string(std::string_view name);

struct GnnConfig {
  ConvKind kind = ConvKind::GraphConv;
  std::size_t num_layers = 3;
  std::size_t hidden_dim = 16;
  std::size_t representation_dim = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Tuned architecture per operator: layers, hidden and representation width.
GnnConfig default_config(ConvKind kind);
/// Tuned attention (query/key) width that goes with `default_config(kind)`.
std::size_t default_attention_dim(ConvKind kind);

enum class Activation { None, Relu };

inline constexpr double kGatNegativeSlope = 0.2;

// Parameter naming: every layer owns tensors "<prefix>.<name>" in a ParameterSet.
//   conv:   W1 [in x out], W2 [in x out] (GraphConv, SAGEConv, GATConv), W [in x out] (GCNConv),
//           a [2*out x 1] (GATConv)
//   DMPNN:  W_in [(in+1) x out], W_h [out x out], W_out [(in+out) x out]
//   dense:  W [in x out], b [1 x out]

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
void init_conv(ad::ParameterSet& params, const std::string& prefix, ConvKind kind, std::size_t in_dim,
               std::size_t out_dim, Rng& rng);
void init_dense(ad::ParameterSet& params, const std::string& prefix, std::size_t in_dim, std::size_t out_dim,
                Rng& rng);

/// Node features of `graph` as an n x 13 constant.
ad::Var node_feature_matrix(ad::Tape& tape, const chem::MolecularGraph& graph);

/// One message-passing layer (not DMPNN), x is n x in, result n x out. No activation.
ad::Var conv_forward(ad::ParameterBinding& bind, const std::string& prefix, ConvKind kind,
                     const chem::MolecularGraph& graph, ad::Var x);

/// Directed message passing with `iterations` edge-state updates; result n x out.
ad::Var dmpnn_forward(ad::ParameterBinding& bind, const std::string& prefix, const chem::MolecularGraph& graph,
                      ad::Var x, std::size_t iterations);

/// Column mean of an n x d matrix, shape 1 x d.
ad::Var global_mean_pool(ad::Var node_feats);

/// activation(x W + b) for a 1 x in row vector.
ad::Var dense_forward(ad::ParameterBinding& bind, const std::string& prefix, ad::Var x, Activation activation);

/// Initializes the full convolution stack of `config` under `prefix`.
void init_gnn(ad::ParameterSet& params, const std::string& prefix, const GnnConfig& config, std::size_t in_dim,
              Rng& rng);

/// Convolution stack: relu between layers, none after the last. Output n x hidden_dim.
ad::Var gnn_node_embeddings(ad::ParameterBinding& bind, const std::string& prefix, const GnnConfig& config,
                            const chem::MolecularGraph& graph);

}  // namespace molsets::gnn
