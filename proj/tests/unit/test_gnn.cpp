// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "molsets/autodiff.hpp"
#include "molsets/chem_graph.hpp"
#include "molsets/error.hpp"
#include "molsets/gnn.hpp"
#include "molsets/rng.hpp"

using namespace molsets;
using namespace molsets::gnn;
using ad::Tensor;
using ad::Var;

namespace {

using Rows = std::vector<std::vector<double>>;

// Plain-loop linear algebra for the oracles below.
std::vector<double> row_times(const std::vector<double>& x, const Tensor& w) {
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t c = 0; c < w.cols(); ++c) {
    for (std::size_t r = 0; r < w.rows(); ++r) out[c] += x[r] * w.at(r, c);
  }
  return out;
}

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Edge {
  std::size_t i, j;
  double e;
};

// Vinyl alcohol: C0=C1 (order 2), C1-O2 (order 1).
const std::vector<Edge> kEdges = {{0, 1, 2.0}, {1, 2, 1.0}};
const Rows kX = {{0.5, -1.0}, {1.5, 0.25}, {-0.75, 2.0}};

std::vector<std::vector<std::pair<std::size_t, double>>> adjacency() {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(3);
  for (const Edge& ed : kEdges) {
    adj[ed.i].push_back({ed.j, ed.e});
    adj[ed.j].push_back({ed.i, ed.e});
  }
  return adj;
}

Tensor input_tensor() {
  std::vector<double> v;
  for (const auto& r : kX) v.insert(v.end(), r.begin(), r.end());
  return Tensor({3, 2}, v);
}

Rows run_conv(ConvKind kind, const ad::ParameterSet& params) {
  const auto graph = chem::build_graph("C=CO");
  ad::Tape tape;
  ad::ParameterBinding bind(tape, params, false);
  const Tensor out = conv_forward(bind, "L", kind, graph, tape.constant(input_tensor())).value();
  Rows rows(out.rows(), std::vector<double>(out.cols()));
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) rows[r][c] = out.at(r, c);
  }
  return rows;
}

void check_rows(const Rows& got, const Rows& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t r = 0; r < got.size(); ++r) {
    REQUIRE(got[r].size() == want[r].size());
    for (std::size_t c = 0; c < got[r].size(); ++c) CHECK(got[r][c] == doctest::Approx(want[r][c]).epsilon(1e-13));
  }
}

const Tensor kW1 = Tensor::matrix({{0.3, -0.2}, {0.1, 0.4}});
const Tensor kW2 = Tensor::matrix({{-0.5, 0.25}, {0.6, 0.05}});

double max_rel_error(const ad::GradientMap& a, const ad::GradientMap& b) {
  double worst = 0.0;
  for (const auto& [name, t] : a) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = t[i], y = b.at(name)[i];
      worst = std::max(worst, std::abs(x - y) / std::max(1e-6, std::abs(x) + std::abs(y)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("table defaults per convolution") {
  CHECK(default_config(ConvKind::SAGEConv).hidden_dim == 32);
  CHECK(default_config(ConvKind::SAGEConv).representation_dim == 16);
  CHECK(default_attention_dim(ConvKind::SAGEConv) == 8);
  CHECK(default_config(ConvKind::GraphConv).num_layers == 3);
  CHECK(default_config(ConvKind::GraphConv).hidden_dim == 16);
  CHECK(default_config(ConvKind::GraphConv).representation_dim == 32);
  CHECK(default_attention_dim(ConvKind::GraphConv) == 16);
  CHECK(default_config(ConvKind::GCNConv).representation_dim == 16);
  CHECK(default_attention_dim(ConvKind::GCNConv) == 8);
  CHECK(default_config(ConvKind::GATConv).num_layers == 2);
  CHECK(default_config(ConvKind::GATConv).representation_dim == 32);
  CHECK(default_config(ConvKind::DMPNN).hidden_dim == 32);
  CHECK(default_attention_dim(ConvKind::DMPNN) == 16);
  CHECK(conv_kind_from_string("gatconv") == ConvKind::GATConv);
  CHECK(conv_kind_from_string("DMPNN") == ConvKind::DMPNN);
  CHECK_FALSE(conv_kind_from_string("gin").has_value());
}

TEST_CASE("GraphConv matches the bond-weighted neighbour sum") {
  const auto adj = adjacency();
  Rows want;
  for (std::size_t i = 0; i < 3; ++i) {
    auto out = row_times(kX[i], kW1);
    for (auto [j, e] : adj[i]) axpy(out, e, row_times(kX[j], kW2));
    want.push_back(out);
  }
  check_rows(run_conv(ConvKind::GraphConv, {{"L.W1", kW1}, {"L.W2", kW2}}), want);
}

TEST_CASE("SAGEConv matches the neighbour mean") {
  const auto adj = adjacency();
  Rows want;
  for (std::size_t i = 0; i < 3; ++i) {
    auto out = row_times(kX[i], kW1);
    for (auto [j, e] : adj[i]) axpy(out, 1.0 / adj[i].size(), row_times(kX[j], kW2));
    want.push_back(out);
  }
  check_rows(run_conv(ConvKind::SAGEConv, {{"L.W1", kW1}, {"L.W2", kW2}}), want);
}

TEST_CASE("GCNConv matches symmetric normalization with self loops") {
  const auto adj = adjacency();
  std::vector<double> d(3, 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (auto [j, e] : adj[i]) d[i] += e;
  }
  Rows want;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> out(2, 0.0);
    axpy(out, 1.0 / d[i], row_times(kX[i], kW1));
    for (auto [j, e] : adj[i]) axpy(out, e / std::sqrt(d[i] * d[j]), row_times(kX[j], kW1));
    want.push_back(out);
  }
  check_rows(run_conv(ConvKind::GCNConv, {{"L.W", kW1}}), want);
}

TEST_CASE("GATConv matches leaky-relu attention over neighbours and self") {
  const Tensor a = Tensor::matrix(4, 1, {0.7, -0.3, 0.2, 0.9});
  const std::vector<double> a_left{0.7, -0.3}, a_right{0.2, 0.9};
  const auto adj = adjacency();
  auto leaky = [](double v) { return v > 0 ? v : 0.2 * v; };
  Rows want;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto self = row_times(kX[i], kW1);
    std::vector<std::size_t> sources{i};
    for (auto [j, e] : adj[i]) sources.push_back(j);
    std::vector<double> logits;
    for (std::size_t j : sources) logits.push_back(leaky(dot(a_left, self) + dot(a_right, row_times(kX[j], kW2))));
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    std::vector<double> out(2, 0.0);
    axpy(out, std::exp(logits[0]) / z, self);
    for (std::size_t k = 1; k < sources.size(); ++k) axpy(out, std::exp(logits[k]) / z, row_times(kX[sources[k]], kW2));
    want.push_back(out);
  }
  check_rows(run_conv(ConvKind::GATConv, {{"L.W1", kW1}, {"L.W2", kW2}, {"L.a", a}}), want);
}

TEST_CASE("DMPNN matches directed edge message passing") {
  const Tensor w_in = Tensor::matrix({{0.2, -0.4}, {0.5, 0.3}, {-0.1, 0.6}});
  const Tensor w_h = Tensor::matrix({{0.3, 0.2}, {-0.7, 0.4}});
  const Tensor w_out = Tensor::matrix({{0.1, 0.2}, {-0.3, 0.5}, {0.4, -0.6}, {0.25, 0.35}});
  const std::size_t iterations = 2;
  auto relu_vec = [](std::vector<double> v) {
    for (double& x : v) x = std::max(0.0, x);
    return v;
  };
  struct Directed {
    std::size_t from, to;
    double e;
  };
  std::vector<Directed> dir;
  for (const Edge& ed : kEdges) {
    dir.push_back({ed.i, ed.j, ed.e});
    dir.push_back({ed.j, ed.i, ed.e});
  }
  std::vector<std::vector<double>> h0, h;
  for (const auto& d : dir) h0.push_back(relu_vec(row_times({kX[d.from][0], kX[d.from][1], d.e}, w_in)));
  h = h0;
  for (std::size_t t = 0; t < iterations; ++t) {
    std::vector<std::vector<double>> next;
    for (const auto& d : dir) {
      std::vector<double> m(2, 0.0);
      for (const auto& k : dir) {
        if (k.to == d.from && k.from != d.to) axpy(m, 1.0, h[&k - dir.data()]);
      }
      auto v = row_times(m, w_h);
      axpy(v, 1.0, h0[&d - dir.data()]);
      next.push_back(relu_vec(v));
    }
    h = next;
  }
  Rows want;
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> incoming(2, 0.0);
    for (std::size_t k = 0; k < dir.size(); ++k) {
      if (dir[k].to == i) axpy(incoming, 1.0, h[k]);
    }
    want.push_back(relu_vec(row_times({kX[i][0], kX[i][1], incoming[0], incoming[1]}, w_out)));
  }
  const auto graph = chem::build_graph("C=CO");
  ad::Tape tape;
  ad::ParameterSet params{{"D.W_in", w_in}, {"D.W_h", w_h}, {"D.W_out", w_out}};
  ad::ParameterBinding bind(tape, params, false);
  const Tensor out = dmpnn_forward(bind, "D", graph, tape.constant(input_tensor()), iterations).value();
  Rows got(3, std::vector<double>(2));
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 2; ++c) got[r][c] = out.at(r, c);
  }
  check_rows(got, want);
}

TEST_CASE("isolated atoms get self terms only") {
  const auto ion = chem::build_graph("[Li+]");
  for (ConvKind kind : {ConvKind::GraphConv, ConvKind::SAGEConv, ConvKind::GCNConv, ConvKind::GATConv,
                        ConvKind::DMPNN}) {
    CAPTURE(to_string(kind));
    GnnConfig config{kind, 2, 4, 4, 0};
    ad::ParameterSet params;
    Rng rng(5);
    init_gnn(params, "p", config, chem::kNodeFeatureDim, rng);
    ad::Tape tape;
    ad::ParameterBinding bind(tape, params, false);
    const Tensor out = gnn_node_embeddings(bind, "p", config, ion).value();
    CHECK(out.rows() == 1);
    CHECK(out.cols() == 4);
    for (double v : out.values()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("node embeddings are permutation equivariant and pooling invariant") {
  const auto graph = chem::build_graph("CC1COC(=O)O1");
  std::vector<std::size_t> order{3, 0, 6, 1, 5, 2, 4};
  const auto permuted = graph.permuted(order);
  for (ConvKind kind : {ConvKind::GraphConv, ConvKind::SAGEConv, ConvKind::GCNConv, ConvKind::GATConv,
                        ConvKind::DMPNN}) {
    CAPTURE(to_string(kind));
    const GnnConfig config = default_config(kind);
    ad::ParameterSet params;
    Rng rng(11);
    init_gnn(params, "p", config, chem::kNodeFeatureDim, rng);
    ad::Tape tape;
    ad::ParameterBinding bind(tape, params, false);
    Var a = gnn_node_embeddings(bind, "p", config, graph);
    Var b = gnn_node_embeddings(bind, "p", config, permuted);
    for (std::size_t k = 0; k < order.size(); ++k) {
      for (std::size_t c = 0; c < a.value().cols(); ++c) {
        CHECK(b.value().at(k, c) == doctest::Approx(a.value().at(order[k], c)).epsilon(1e-12));
      }
    }
    const Tensor pa = global_mean_pool(a).value();
    const Tensor pb = global_mean_pool(b).value();
    for (std::size_t c = 0; c < pa.size(); ++c) CHECK(pb[c] == doctest::Approx(pa[c]).epsilon(1e-12));
  }
}

TEST_CASE("convolution stack gradients match finite differences") {
  const auto graph = chem::build_graph("OCC(=O)N");
  for (ConvKind kind : {ConvKind::GraphConv, ConvKind::SAGEConv, ConvKind::GCNConv, ConvKind::GATConv,
                        ConvKind::DMPNN}) {
    CAPTURE(to_string(kind));
    GnnConfig config{kind, 2, 3, 3, 0};
    ad::ParameterSet params;
    Rng rng(21);
    init_gnn(params, "p", config, chem::kNodeFeatureDim, rng);
    init_dense(params, "r", config.hidden_dim, 1, rng);
    auto loss = [&](ad::ParameterBinding& bind) {
      Var pooled = global_mean_pool(gnn_node_embeddings(bind, "p", config, graph));
      Var y = dense_forward(bind, "r", pooled, Activation::None);
      return ad::sum_all(ad::mul(y, y));
    };
    ad::Tape tape;
    ad::ParameterBinding bind(tape, params);
    tape.backward(loss(bind));
    const auto numeric = ad::finite_diff_gradient(
        [&](const ad::ParameterSet& p) {
          ad::Tape t;
          ad::ParameterBinding b(t, p, false);
          return loss(b).value().item();
        },
        params, 1e-6);
    CHECK(max_rel_error(bind.gradients(), numeric) < 1e-5);
  }
}

TEST_CASE("mismatched feature width is a dimension error") {
  const auto graph = chem::build_graph("CO");
  ad::ParameterSet params{{"L.W1", kW1}, {"L.W2", kW2}};
  ad::Tape tape;
  ad::ParameterBinding bind(tape, params, false);
  Var x = tape.constant(Tensor::zeros({2, 3}));
  CHECK_THROWS_AS(conv_forward(bind, "L", ConvKind::GraphConv, graph, x), DimensionError);
  Var wrong_rows = tape.constant(Tensor::zeros({5, 2}));
  CHECK_THROWS_AS(conv_forward(bind, "L", ConvKind::GraphConv, graph, wrong_rows), DimensionError);
}
