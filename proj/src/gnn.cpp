// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/gnn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "molsets/error.hpp"

namespace molsets::gnn {

using ad::Var;

namespace {

ad::Tensor uniform_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  ad::Tensor t = ad::Tensor::zeros({rows, cols});
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

void check_input_dim(const ad::Tensor& weight, Var x, const std::string& prefix) {
  if (x.value().rank() != 2 || x.value().cols() != weight.shape()[0]) {
    throw DimensionError(prefix + ": feature shape " + x.value().shape_string() + " does not match input dim " +
                         std::to_string(weight.shape()[0]));
  }
}

ad::SparseRows neighbor_operator(const chem::MolecularGraph& graph, ConvKind kind) {
  const std::size_t n = graph.num_nodes();
  ad::SparseRows op;
  op.cols = n;
  std::vector<double> degree(n, 1.0);
  if (kind == ConvKind::GCNConv) {
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& [j, e] : graph.neighbors(i)) degree[i] += e;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nbrs = graph.neighbors(i);
    switch (kind) {
      case ConvKind::GraphConv:
        for (const auto& [j, e] : nbrs) op.push(j, e);
        break;
      case ConvKind::SAGEConv:
        for (const auto& [j, e] : nbrs) op.push(j, 1.0 / static_cast<double>(nbrs.size()));
        break;
      case ConvKind::GCNConv:
        op.push(i, 1.0 / degree[i]);  // self loop, e_ii = 1
        for (const auto& [j, e] : nbrs) op.push(j, e / std::sqrt(degree[i] * degree[j]));
        break;
      default:
        throw ContractError("no sparse operator for this convolution kind");
    }
    op.end_row();
  }
  return op;
}

Var gat_forward(ad::ParameterBinding& bind, const std::string& prefix, const chem::MolecularGraph& graph, Var x) {
  Var w1 = bind(prefix + ".W1");
  Var w2 = bind(prefix + ".W2");
  Var a = bind(prefix + ".a");
  check_input_dim(w1.value(), x, prefix);
  const std::size_t n = graph.num_nodes();
  Var self_proj = ad::matmul(x, w1);
  Var nbr_proj = ad::matmul(x, w2);

  // Attention pairs (i, j) for j in N(i) plus the self pair (i, i), grouped by i.
  std::vector<std::size_t> target, source, self_slot(n), nbr_slots, nbr_target, nbr_source;
  for (std::size_t i = 0; i < n; ++i) {
    self_slot[i] = target.size();
    target.push_back(i);
    source.push_back(i);
    for (const auto& [j, e] : graph.neighbors(i)) {
      nbr_slots.push_back(target.size());
      nbr_target.push_back(i);
      nbr_source.push_back(j);
      target.push_back(i);
      source.push_back(j);
    }
  }
  Var pair_feats = ad::concat({ad::gather_rows(self_proj, target), ad::gather_rows(nbr_proj, source)}, 1);
  Var logits = ad::leaky_relu(ad::matmul(pair_feats, a), kGatNegativeSlope);
  Var alpha = ad::segment_softmax(logits, target, n);

  Var out = ad::scale_rows(self_proj, ad::gather_rows(alpha, self_slot));
  if (!nbr_slots.empty()) {
    Var weighted = ad::scale_rows(ad::gather_rows(nbr_proj, nbr_source), ad::gather_rows(alpha, nbr_slots));
    out = ad::add(out, ad::scatter_add_rows(weighted, nbr_target, n));
  }
  return out;
}

}  // namespace

std::string_view to_string(ConvKind kind) {
  switch (kind) {
    case ConvKind::GraphConv: return "GraphConv";
    case ConvKind::SAGEConv: return "SAGEConv";
    case ConvKind::GCNConv: return "GCNConv";
    case ConvKind::GATConv: return "GATConv";
    case ConvKind::DMPNN: return "DMPNN";
  }
  return "unknown";
}

std::optional<ConvKind> conv_kind_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (ConvKind kind : {ConvKind::GraphConv, ConvKind::SAGEConv, ConvKind::GCNConv, ConvKind::GATConv,
                        ConvKind::DMPNN}) {
    std::string canonical(to_string(kind));
    std::transform(canonical.begin(), canonical.end(), canonical.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (canonical == lower) return kind;
  }
  return std::nullopt;
}

void GnnConfig::validate() const {
  if (num_layers < 1) throw ContractError("GNN needs at least one convolution layer");
  if (hidden_dim < 1 || representation_dim < 1) throw ContractError("GNN dimensions must be positive");
}

GnnConfig default_config(ConvKind kind) {
  switch (kind) {
    case ConvKind::SAGEConv: return {kind, 3, 32, 16, 0};
    case ConvKind::GraphConv: return {kind, 3, 16, 32, 0};
    case ConvKind::GCNConv: return {kind, 3, 16, 16, 0};
    case ConvKind::GATConv: return {kind, 2, 16, 32, 0};
    case ConvKind::DMPNN: return {kind, 3, 32, 16, 0};
  }
  return {};
}

std::size_t default_attention_dim(ConvKind kind) {
  switch (kind) {
    case ConvKind::SAGEConv: return 8;
    case ConvKind::GraphConv: return 16;
    case ConvKind::GCNConv: return 8;
    case ConvKind::GATConv: return 8;
    case ConvKind::DMPNN: return 16;
  }
  return 16;
}

void init_conv(ad::ParameterSet& params, const std::string& prefix, ConvKind kind, std::size_t in_dim,
               std::size_t out_dim, Rng& rng) {
  switch (kind) {
    case ConvKind::GCNConv:
      params[prefix + ".W"] = uniform_matrix(in_dim, out_dim, in_dim, rng);
      break;
    case ConvKind::GraphConv:
    case ConvKind::SAGEConv:
      params[prefix + ".W1"] = uniform_matrix(in_dim, out_dim, in_dim, rng);
      params[prefix + ".W2"] = uniform_matrix(in_dim, out_dim, in_dim, rng);
      break;
    case ConvKind::GATConv:
      params[prefix + ".W1"] = uniform_matrix(in_dim, out_dim, in_dim, rng);
      params[prefix + ".W2"] = uniform_matrix(in_dim, out_dim, in_dim, rng);
      params[prefix + ".a"] = uniform_matrix(2 * out_dim, 1, 2 * out_dim, rng);
      break;
    case ConvKind::DMPNN:
      params[prefix + ".W_in"] = uniform_matrix(in_dim + 1, out_dim, in_dim + 1, rng);
      params[prefix + ".W_h"] = uniform_matrix(out_dim, out_dim, out_dim, rng);
      params[prefix + ".W_out"] = uniform_matrix(in_dim + out_dim, out_dim, in_dim + out_dim, rng);
      break;
  }
}

void init_dense(ad::ParameterSet& params, const std::string& prefix, std::size_t in_dim, std::size_t out_dim,
                Rng& rng) {
  params[prefix + ".W"] = uniform_matrix(in_dim, out_dim, in_dim, rng);
  params[prefix + ".b"] = ad::Tensor::zeros({1, out_dim});
}

Var node_feature_matrix(ad::Tape& tape, const chem::MolecularGraph& graph) {
  return tape.constant(ad::Tensor({graph.num_nodes(), chem::kNodeFeatureDim}, graph.node_features()));
}

Var conv_forward(ad::ParameterBinding& bind, const std::string& prefix, ConvKind kind,
                 const chem::MolecularGraph& graph, Var x) {
  if (x.value().rank() != 2 || x.value().rows() != graph.num_nodes()) {
    throw DimensionError(prefix + ": expected one feature row per node, got " + x.value().shape_string());
  }
  switch (kind) {
    case ConvKind::GraphConv:
    case ConvKind::SAGEConv: {
      Var w1 = bind(prefix + ".W1");
      Var w2 = bind(prefix + ".W2");
      check_input_dim(w1.value(), x, prefix);
      // Aggregating after the projection is the same linear map and narrower.
      Var messages = ad::propagate(neighbor_operator(graph, kind), ad::matmul(x, w2));
      return ad::add(ad::matmul(x, w1), messages);
    }
    case ConvKind::GCNConv: {
      Var w = bind(prefix + ".W");
      check_input_dim(w.value(), x, prefix);
      return ad::propagate(neighbor_operator(graph, kind), ad::matmul(x, w));
    }
    case ConvKind::GATConv: return gat_forward(bind, prefix, graph, x);
    case ConvKind::DMPNN: return dmpnn_forward(bind, prefix, graph, x, 1);
  }
  throw ContractError("unknown convolution kind");
}

Var dmpnn_forward(ad::ParameterBinding& bind, const std::string& prefix, const chem::MolecularGraph& graph, Var x,
                  std::size_t iterations) {
  if (iterations < 1) throw ContractError("DMPNN needs at least one iteration");
  Var w_in = bind(prefix + ".W_in");
  Var w_h = bind(prefix + ".W_h");
  Var w_out = bind(prefix + ".W_out");
  const std::size_t n = graph.num_nodes();
  const std::size_t in_dim = w_in.value().shape()[0] - 1;
  if (x.value().rank() != 2 || x.value().cols() != in_dim || x.value().rows() != n) {
    throw DimensionError(prefix + ": feature shape " + x.value().shape_string() + " does not match input dim " +
                         std::to_string(in_dim));
  }
  const std::size_t hidden = w_h.value().shape()[0];
  ad::Tape& tape = bind.tape();

  Var incoming;
  if (graph.num_edges() == 0) {
    incoming = tape.constant(ad::Tensor::zeros({n, hidden}));
  } else {
    // Directed edge 2e runs begin->end, 2e+1 the reverse.
    std::vector<std::size_t> src, dst, rev;
    std::vector<double> bond;
    for (const chem::Bond& b : graph.edges()) {
      const std::size_t e = src.size();
      src.insert(src.end(), {b.begin, b.end});
      dst.insert(dst.end(), {b.end, b.begin});
      rev.insert(rev.end(), {e + 1, e});
      bond.insert(bond.end(), {b.order_code, b.order_code});
    }
    const std::size_t m = src.size();
    Var bond_col = tape.constant(ad::Tensor({m, 1}, bond));
    Var h0 = ad::relu(ad::matmul(ad::concat({ad::gather_rows(x, src), bond_col}, 1), w_in));
    Var h = h0;
    for (std::size_t t = 0; t < iterations; ++t) {
      // Sum over k in N(i) \ {j} of h_{k->i}: everything entering i minus the reverse edge.
      Var into_source = ad::gather_rows(ad::scatter_add_rows(h, dst, n), src);
      Var message = ad::sub(into_source, ad::gather_rows(h, rev));
      h = ad::relu(ad::add(h0, ad::matmul(message, w_h)));
    }
    incoming = ad::scatter_add_rows(h, dst, n);
  }
  return ad::relu(ad::matmul(ad::concat({x, incoming}, 1), w_out));
}

Var global_mean_pool(Var node_feats) {
  if (node_feats.value().rank() != 2 || node_feats.value().rows() == 0) {
    throw ContractError("global mean pool needs at least one node");
  }
  return ad::mean(node_feats, 0);
}

Var dense_forward(ad::ParameterBinding& bind, const std::string& prefix, Var x, Activation activation) {
  Var w = bind(prefix + ".W");
  Var b = bind(prefix + ".b");
  check_input_dim(w.value(), x, prefix);
  Var y = ad::add(ad::matmul(x, w), b);
  return activation == Activation::Relu ? ad::relu(y) : y;
}

void init_gnn(ad::ParameterSet& params, const std::string& prefix, const GnnConfig& config, std::size_t in_dim,
              Rng& rng) {
  config.validate();
  if (config.kind == ConvKind::DMPNN) {
    init_conv(params, prefix + ".dmpnn", config.kind, in_dim, config.hidden_dim, rng);
    return;
  }
  std::size_t width = in_dim;
  for (std::size_t layer = 0; layer < config.num_layers; ++layer) {
    init_conv(params, prefix + ".conv" + std::to_string(layer), config.kind, width, config.hidden_dim, rng);
    width = config.hidden_dim;
  }
}

Var gnn_node_embeddings(ad::ParameterBinding& bind, const std::string& prefix, const GnnConfig& config,
                        const chem::MolecularGraph& graph) {
  Var h = node_feature_matrix(bind.tape(), graph);
  if (config.kind == ConvKind::DMPNN) {
    return dmpnn_forward(bind, prefix + ".dmpnn", graph, h, config.num_layers);
  }
  for (std::size_t layer = 0; layer < config.num_layers; ++layer) {
    h = conv_forward(bind, prefix + ".conv" + std::to_string(layer), config.kind, graph, h);
    if (layer + 1 < config.num_layers) h = ad::relu(h);
  }
  return h;
}

}  // namespace molsets::gnn
