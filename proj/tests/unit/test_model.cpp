// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "molsets/data.hpp"
#include "molsets/error.hpp"
#include "molsets/model.hpp"
#include "molsets/rng.hpp"

using namespace molsets;
using namespace molsets::model;
using ad::Tensor;
using ad::Var;

namespace {

MixtureInput random_mixture(Rng& rng, std::size_t k) {
  const auto& pool = data::synthetic_solvent_pool();
  const auto& salts = data::synthetic_salt_pool();
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  MixtureInput mix;
  double total = 0.0;
  std::vector<double> w(k);
  for (double& v : w) total += (v = rng.uniform(0.1, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    mix.solvents.push_back({chem::build_graph(pool[idx[i]].smiles, pool[idx[i]].mol_weight), w[i] / total});
  }
  mix.salt = chem::build_graph(salts[rng.below(salts.size())].smiles);
  mix.molality = rng.uniform(0.5, 2.0);
  return mix;
}

MixtureInput reversed(MixtureInput mix) {
  std::reverse(mix.solvents.begin(), mix.solvents.end());
  return mix;
}

ModelConfig micro_config(gnn::ConvKind kind, Variant variant, std::uint64_t seed) {
  ModelConfig c = ModelConfig::defaults(kind, variant);
  for (auto* g : {&c.solvent_gnn, &c.salt_gnn}) {
    g->num_layers = 2;
    g->hidden_dim = 3;
    g->representation_dim = 4;
  }
  c.attention_dim = 2;
  c.rho_hidden = {4};
  c.seed = seed;
  return c;
}

std::vector<double> row(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("parameter layout of the default GraphConv model") {
  const ModelConfig config = ModelConfig::defaults(gnn::ConvKind::GraphConv);
  const auto params = init_parameters(config);
  CHECK(params.at("phi_solvent.conv0.W1").shape() == std::vector<std::size_t>{13, 16});
  CHECK(params.at("phi_solvent.conv2.W2").shape() == std::vector<std::size_t>{16, 16});
  CHECK(params.at("phi_salt.readout.W").shape() == std::vector<std::size_t>{17, 32});
  CHECK(params.at("attention.WQ").shape() == std::vector<std::size_t>{32, 16});
  CHECK(params.at("attention.WV").shape() == std::vector<std::size_t>{32, 32});
  CHECK(config.rho_input_dim() == 65);
  CHECK(params.at("rho.layer0.W").shape() == std::vector<std::size_t>{65, 32});
  CHECK(params.at("rho.layer2.W").shape() == std::vector<std::size_t>{16, 1});
  for (double b : params.at("rho.layer0.b").values()) CHECK(b == 0.0);
  const double bound = 1.0 / std::sqrt(13.0);
  for (double w : params.at("phi_solvent.conv0.W1").values()) CHECK(std::abs(w) <= bound);

  const auto wsum = init_parameters(ModelConfig::defaults(gnn::ConvKind::GraphConv, Variant::WeightedSum));
  CHECK(wsum.count("attention.WQ") == 0);
  const ModelConfig concat = ModelConfig::defaults(gnn::ConvKind::GraphConv, Variant::Concat);
  CHECK(concat.rho_input_dim() == 4 * 32 + 4 + 32 + 1);
  CHECK(init_parameters(ModelConfig::defaults(gnn::ConvKind::DMPNN)).count("phi_solvent.dmpnn.W_h") == 1);
}

TEST_CASE("initialization is seeded") {
  ModelConfig a = ModelConfig::defaults(gnn::ConvKind::SAGEConv);
  a.seed = 4;
  ModelConfig b = a;
  CHECK(init_parameters(a) == init_parameters(b));
  b.seed = 5;
  CHECK_FALSE(init_parameters(a) == init_parameters(b));
}

TEST_CASE("attention aggregation matches a hand computation") {
  ModelConfig config = micro_config(gnn::ConvKind::GraphConv, Variant::MolSets, 1);
  config.solvent_gnn.representation_dim = 2;
  config.attention_dim = 2;
  auto params = init_parameters(config);
  const Tensor wq = Tensor::matrix({{0.5, -0.2}, {0.1, 0.3}});
  const Tensor wk = Tensor::matrix({{0.4, 0.6}, {-0.7, 0.2}});
  const Tensor wv = Tensor::matrix({{1.0, 0.5}, {-0.5, 2.0}});
  params["attention.WQ"] = wq;
  params["attention.WK"] = wk;
  params["attention.WV"] = wv;
  const MolSetsModel model(config, params);

  const std::vector<std::vector<double>> z{{1.0, 2.0}, {-0.5, 0.3}, {0.8, -1.1}};
  const std::vector<double> w{0.2, 0.5, 0.3};
  auto times = [](const std::vector<double>& x, const Tensor& m) {
    return std::vector<double>{x[0] * m.at(0, 0) + x[1] * m.at(1, 0), x[0] * m.at(0, 1) + x[1] * m.at(1, 1)};
  };
  std::vector<double> logits;
  for (const auto& zi : z) {
    const auto q = times(zi, wq), k = times(zi, wk);
    logits.push_back((q[0] * k[0] + q[1] * k[1]) / std::sqrt(2.0));
  }
  double norm = 0.0;
  for (double l : logits) norm += std::exp(l);
  std::vector<double> want(2, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = times(z[i], wv);
    const double s = std::exp(logits[i]) / norm;
    want[0] += w[i] * s * v[0];
    want[1] += w[i] * s * v[1];
  }

  ad::Tape tape;
  ad::ParameterBinding bind(tape, model.parameters(), false);
  std::vector<Var> reprs;
  for (const auto& zi : z) reprs.push_back(tape.constant(Tensor::matrix(1, 2, zi)));
  const auto got = row(model.aggregate_attention(bind, reprs, w).value());
  CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-14));
  CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-14));

  const auto sum = row(model.aggregate_weighted_sum(bind, reprs, w).value());
  CHECK(sum[0] == doctest::Approx(0.2 * 1.0 + 0.5 * -0.5 + 0.3 * 0.8).epsilon(1e-14));
  CHECK(sum[1] == doctest::Approx(0.2 * 2.0 + 0.5 * 0.3 + 0.3 * -1.1).epsilon(1e-14));
}

TEST_CASE("concatenation layout pads representations and weights") {
  ModelConfig config = micro_config(gnn::ConvKind::GraphConv, Variant::Concat, 1);
  config.solvent_gnn.representation_dim = 2;
  const MolSetsModel model(config);
  ad::Tape tape;
  ad::ParameterBinding bind(tape, model.parameters(), false);
  std::vector<Var> reprs{tape.constant(Tensor::matrix({{1, 2}})), tape.constant(Tensor::matrix({{3, 4}}))};
  const std::vector<double> w{0.25, 0.75};
  const auto got = row(model.concat_representations(bind, reprs, w).value());
  const std::vector<double> want{1, 2, 3, 4, 0, 0, 0, 0, 0.25, 0.75, 0, 0};
  CHECK(got == want);
}

TEST_CASE("set variants are invariant to solvent order") {
  Rng rng(99);
  for (Variant variant : {Variant::MolSets, Variant::WeightedSum}) {
    for (gnn::ConvKind kind : {gnn::ConvKind::GraphConv, gnn::ConvKind::SAGEConv, gnn::ConvKind::GCNConv,
                               gnn::ConvKind::GATConv, gnn::ConvKind::DMPNN}) {
      ModelConfig config = ModelConfig::defaults(kind, variant);
      config.seed = rng.next_u64();
      const MolSetsModel model(config);
      const MixtureInput mix = random_mixture(rng, 2 + rng.below(3));
      const double a = model.predict(mix, SolventOrder::AsGiven);
      const double b = model.predict(reversed(mix), SolventOrder::AsGiven);
      CHECK(std::abs(a - b) <= 1e-9);
      CHECK(model.predict(mix) == model.predict(reversed(mix)));
    }
  }
}

TEST_CASE("concat variant depends on solvent order") {
  Rng rng(7);
  const MolSetsModel model([&] {
    ModelConfig c = ModelConfig::defaults(gnn::ConvKind::GraphConv, Variant::Concat);
    c.seed = 3;
    return c;
  }());
  const MixtureInput mix = random_mixture(rng, 3);
  CHECK(std::abs(model.predict(mix) - model.predict(reversed(mix))) > 1e-6);
}

TEST_CASE("a single solvent passes through attention unchanged in scale") {
  ModelConfig config = micro_config(gnn::ConvKind::GraphConv, Variant::MolSets, 2);
  const MolSetsModel model(config);
  ad::Tape tape;
  ad::ParameterBinding bind(tape, model.parameters(), false);
  Var z = tape.constant(Tensor::matrix({{0.3, -0.1, 0.7, 0.2}}));
  const std::vector<double> one{1.0};
  const auto got = row(model.aggregate_attention(bind, std::vector<Var>{z}, one).value());
  const auto want = row(ad::matmul(z, bind("attention.WV")).value());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-15));
}

TEST_CASE("mixture validation") {
  Rng rng(1);
  const MolSetsModel model(ModelConfig::defaults(gnn::ConvKind::GCNConv));
  MixtureInput mix = random_mixture(rng, 2);
  mix.solvents[0].weight += 0.1;
  CHECK_THROWS_AS(model.predict(mix), ContractError);
  MixtureInput too_many = random_mixture(rng, 4);
  too_many.solvents.push_back(too_many.solvents.back());
  for (auto& s : too_many.solvents) s.weight = 0.2;
  CHECK_THROWS_AS(model.predict(too_many), ContractError);
  MixtureInput empty = random_mixture(rng, 1);
  empty.solvents.clear();
  CHECK_THROWS_AS(model.predict(empty), ContractError);
  MixtureInput negative = random_mixture(rng, 1);
  negative.molality = -1.0;
  CHECK_THROWS_AS(model.predict(negative), ContractError);
}

TEST_CASE("end-to-end gradients match finite differences") {
  Rng rng(17);
  for (Variant variant : {Variant::MolSets, Variant::WeightedSum, Variant::Concat}) {
    const MolSetsModel model(micro_config(gnn::ConvKind::GraphConv, variant, 8));
    const MixtureInput mix = random_mixture(rng, 3);
    auto loss = [&](ad::ParameterBinding& bind) {
      std::vector<Var> reprs;
      std::vector<double> w;
      for (const auto& s : mix.solvents) {
        reprs.push_back(model.embed_molecule(bind, Pathway::Solvent, s.graph));
        w.push_back(s.weight);
      }
      Var y = model.forward(bind, reprs, w, model.embed_molecule(bind, Pathway::Salt, mix.salt), mix.molality);
      Var d = ad::sub(y, bind.tape().constant(Tensor::matrix({{-2.0}})));
      return ad::sum_all(ad::mul(d, d));
    };
    ad::Tape tape;
    ad::ParameterBinding bind(tape, model.parameters());
    tape.backward(loss(bind));
    const auto analytic = bind.gradients();
    const auto numeric = ad::finite_diff_gradient(
        [&](const ad::ParameterSet& p) {
          ad::Tape t;
          ad::ParameterBinding b(t, p, false);
          return loss(b).value().item();
        },
        model.parameters(), 1e-6);
    for (const auto& [name, g] : analytic) {
      double diff = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        diff += std::pow(g[i] - numeric.at(name)[i], 2);
        scale += std::pow(numeric.at(name)[i], 2);
      }
      CAPTURE(name);
      CHECK(std::sqrt(diff) <= 1e-4 * std::max(std::sqrt(scale), 1e-8));
    }
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(23);
  ModelConfig config = ModelConfig::defaults(gnn::ConvKind::GATConv);
  config.seed = 77;
  const MolSetsModel model(config);
  const std::string text = checkpoint_to_json(model);
  const MolSetsModel loaded = checkpoint_from_json(text);
  CHECK(loaded.parameters() == model.parameters());
  CHECK(checkpoint_to_json(loaded) == text);
  const MixtureInput mix = random_mixture(rng, 3);
  CHECK(loaded.predict(mix) == model.predict(mix));

  const auto path = (std::filesystem::temp_directory_path() / "molsets_model_test.json").string();
  save_checkpoint(model, path);
  CHECK(load_checkpoint(path).parameters() == model.parameters());
  std::remove(path.c_str());

  auto doc = nlohmann::json::parse(text);
  CHECK(doc.at("feature_schema_version") == 1);
  CHECK(doc.at("config").at("variant") == "molsets");
  doc["feature_schema_version"] = 2;
  CHECK_THROWS_AS(checkpoint_from_json(doc.dump()), DataError);
  doc = nlohmann::json::parse(text);
  doc["parameters"]["attention.WQ"]["shape"] = {1, 1};
  CHECK_THROWS_AS(checkpoint_from_json(doc.dump()), Error);
  doc = nlohmann::json::parse(text);
  doc["parameters"].erase("attention.WK");
  CHECK_THROWS_AS(checkpoint_from_json(doc.dump()), Error);
  CHECK_THROWS_AS(checkpoint_from_json("{not json"), DataError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.json"), DataError);
}

TEST_CASE("flat settings override the table defaults") {
  const ModelConfig c = config_from_settings(R"({"hidden_dim": 8, "rho_hidden": [5], "seed": 12, "lr": 0.1})",
                                             gnn::ConvKind::SAGEConv, Variant::WeightedSum);
  CHECK(c.solvent_gnn.hidden_dim == 8);
  CHECK(c.salt_gnn.hidden_dim == 8);
  CHECK(c.solvent_gnn.representation_dim == 16);
  CHECK(c.attention_dim == 8);
  CHECK(c.rho_hidden == std::vector<std::size_t>{5});
  CHECK(c.seed == 12);
  CHECK(c.variant == Variant::WeightedSum);
  CHECK_THROWS_AS(config_from_settings(R"({"hidden_dim": "wide"})", gnn::ConvKind::SAGEConv, Variant::MolSets),
                  DataError);
  CHECK_THROWS_AS(config_from_settings(R"({"hidden_dim": 0})", gnn::ConvKind::SAGEConv, Variant::MolSets),
                  ContractError);
}
