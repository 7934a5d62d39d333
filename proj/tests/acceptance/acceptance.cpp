// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

// Runs the ten acceptance checks and prints one PASS/FAIL line for each.
// Exit status is the number of failed checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "../common/screening_lists.hpp"
#include "../common/smiles_corpus.hpp"
#include "molsets/data.hpp"
#include "molsets/log.hpp"
#include "molsets/metrics.hpp"
#include "molsets/model.hpp"
#include "molsets/rng.hpp"
#include "molsets/screening.hpp"
#include "molsets/train.hpp"

using namespace molsets;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

constexpr gnn::ConvKind kKinds[] = {gnn::ConvKind::GraphConv, gnn::ConvKind::SAGEConv, gnn::ConvKind::GCNConv,
                                    gnn::ConvKind::GATConv, gnn::ConvKind::DMPNN};

// Solvents for random mixtures: the screening list plus the two polymers.
struct Molecule {
  std::string smiles;
  std::optional<double> mol_weight;
};

std::vector<Molecule> mixture_pool() {
  std::vector<Molecule> pool;
  for (const auto& s : testing::screening_solvents()) pool.push_back({s, std::nullopt});
  pool.push_back({"[Cu]CCO[Au]", 100000.0});
  pool.push_back({"[Cu]CC(C)O[Au]", 4000.0});
  return pool;
}

model::MixtureInput random_mixture(Rng& rng, const std::vector<Molecule>& pool,
                                   const std::vector<std::string>& salts) {
  const std::size_t k = 2 + rng.below(3);
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  std::vector<double> w(k);
  for (double& v : w) v = rng.uniform(0.05, 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  model::MixtureInput mix;
  for (std::size_t i = 0; i < k; ++i) {
    mix.solvents.push_back({chem::build_graph(pool[idx[i]].smiles, pool[idx[i]].mol_weight), w[i] / total});
  }
  mix.salt = chem::build_graph(salts[rng.below(salts.size())]);
  mix.molality = rng.uniform(0.1, 2.5);
  return mix;
}

model::MolSetsModel random_model(Rng& rng, model::Variant variant, std::size_t trial) {
  model::ModelConfig config = model::ModelConfig::defaults(kKinds[trial % 5], variant);
  config.seed = rng.next_u64();
  return model::MolSetsModel(config);
}

Outcome permutation_invariance() {
  Rng rng(20260101);
  const auto pool = mixture_pool();
  const auto salts = testing::screening_salts();
  double worst = 0.0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const auto model = random_model(rng, model::Variant::MolSets, trial);
    const auto mix = random_mixture(rng, pool, salts);
    const double base = model.predict(mix, model::SolventOrder::AsGiven);
    // Every reordering of the set.
    std::vector<std::size_t> perm(mix.solvents.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    while (std::next_permutation(perm.begin(), perm.end())) {
      model::MixtureInput permuted = mix;
      for (std::size_t i = 0; i < perm.size(); ++i) permuted.solvents[i] = mix.solvents[perm[i]];
      worst = std::max(worst, std::abs(base - model.predict(permuted, model::SolventOrder::AsGiven)));
    }
  }
  return {worst <= 1e-9, "100 models, all orderings of 2-4 solvents, max |diff| = " + fmt("%.3g", worst)};
}

Outcome concat_sensitivity() {
  Rng rng(20260202);
  const auto pool = mixture_pool();
  const auto salts = testing::screening_salts();
  std::size_t changed = 0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const auto model = random_model(rng, model::Variant::Concat, trial);
    const auto mix = random_mixture(rng, pool, salts);
    model::MixtureInput swapped = mix;
    std::swap(swapped.solvents.front(), swapped.solvents.back());
    if (std::abs(model.predict(mix) - model.predict(swapped)) > 1e-6) ++changed;
  }
  return {changed >= 90, std::to_string(changed) + "/100 swaps changed the prediction by more than 1e-6"};
}

Outcome gradient_check() {
  Rng rng(20260303);
  const auto pool = mixture_pool();
  const auto salts = testing::screening_salts();
  double worst = 0.0;
  std::string worst_name;
  std::size_t groups = 0;
  for (model::Variant variant : {model::Variant::MolSets, model::Variant::WeightedSum, model::Variant::Concat}) {
    for (gnn::ConvKind kind : kKinds) {
      model::ModelConfig config = model::ModelConfig::defaults(kind, variant);
      for (auto* g : {&config.solvent_gnn, &config.salt_gnn}) {
        g->num_layers = 2;
        g->hidden_dim = 4;
        g->representation_dim = 4;
      }
      config.attention_dim = 4;
      config.rho_hidden = {4};
      config.seed = rng.next_u64();
      const model::MolSetsModel model(config);
      const std::vector<model::MixtureInput> batch{random_mixture(rng, pool, salts), random_mixture(rng, pool, salts)};
      const std::vector<double> targets{-2.0, -3.5};

      auto loss = [&](ad::ParameterBinding& bind) {
        std::vector<ad::Var> preds;
        for (const auto& mix : batch) {
          std::vector<ad::Var> reprs;
          std::vector<double> w;
          for (const auto& s : mix.solvents) {
            reprs.push_back(model.embed_molecule(bind, model::Pathway::Solvent, s.graph));
            w.push_back(s.weight);
          }
          preds.push_back(
              model.forward(bind, reprs, w, model.embed_molecule(bind, model::Pathway::Salt, mix.salt), mix.molality));
        }
        return train::mse_loss(preds, targets);
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
        double diff = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          diff += std::pow(g[i] - numeric.at(name)[i], 2);
          norm += std::pow(numeric.at(name)[i], 2);
        }
        const double rel = std::sqrt(diff) / std::max(std::sqrt(norm), 1e-7);
        if (rel > worst) worst = rel, worst_name = std::string(model::to_string(variant)) + ":" + name;
        ++groups;
      }
    }
  }
  return {worst <= 1e-4, std::to_string(groups) + " parameter groups over 5 convolutions x 3 variants, max rel err = " +
                             fmt("%.3g", worst) + (worst_name.empty() ? "" : " (" + worst_name + ")")};
}

Outcome arrhenius() {
  const std::vector<data::ConductivityPoint> pts{{300.0, -2.0}, {250.0, -3.0}};
  const auto fit = data::arrhenius_fit(pts);
  const double at298 = fit.predict(298.0);
  const bool ok = std::abs(fit.slope_k + 1500.0) <= 1e-10 && std::abs(fit.intercept_b - 3.0) <= 1e-10 &&
                  std::abs(at298 - (-1500.0 / 298.0 + 3.0)) <= 1e-10 && fmt("%.4f", at298) == "-2.0336";
  return {ok, "k = " + fmt("%.12g", fit.slope_k) + ", b = " + fmt("%.12g", fit.intercept_b) +
                  ", log10 sigma(298 K) = " + fmt("%.16g", at298)};
}

Outcome enumeration() {
  const auto candidates =
      screening::enumerate_binary_candidates(testing::screening_solvents(), testing::screening_salts());
  return {candidates.size() == 11340, "28 solvents x 30 salts -> " + std::to_string(candidates.size())};
}

Outcome metric_oracles() {
  const double rp = metrics::pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
  const double rs = metrics::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 15});
  bool ok = std::abs(rp - 0.5) <= 1e-12 && std::abs(rs - 0.5) <= 1e-12;
  Rng rng(20260606);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(20), y(20), affine(20), monotone(20);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      y[i] = x[i] + rng.normal();
    }
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-5.0, 5.0);
    for (std::size_t i = 0; i < y.size(); ++i) affine[i] = a * y[i] + b, monotone[i] = std::exp(y[i]) + y[i] * y[i] * y[i];
    worst = std::max(worst, std::abs(metrics::pearson(x, affine) - metrics::pearson(x, y)));
    worst = std::max(worst, std::abs(metrics::spearman(x, monotone) - metrics::spearman(x, y)));
    for (double& v : affine) v = -v;
    worst = std::max(worst, std::abs(metrics::pearson(x, affine) + metrics::pearson(x, y)));
  }
  ok = ok && worst <= 1e-12;
  return {ok, "pearson = " + fmt("%.15g", rp) + ", spearman = " + fmt("%.15g", rs) +
                  ", invariance max deviation = " + fmt("%.3g", worst)};
}

Outcome synthetic_learning() {
  const auto records = data::generate_synthetic(700, 20260707, 0.0);
  const std::span<const data::MixtureRecord> all(records);
  const auto train_set = train::PreparedDataset::from_records(all.subspan(0, 500));
  const auto val_set = train::PreparedDataset::from_records(all.subspan(500, 100));
  const auto test_set = train::PreparedDataset::from_records(all.subspan(600, 100));
  model::ModelConfig config = model::ModelConfig::defaults(gnn::ConvKind::GraphConv);
  config.seed = 1;
  // Library defaults except batch size; 8 converges reliably across seeds on 500 mixtures.
  train::TrainConfig tc;
  tc.seed = 1;
  tc.batch_size = 8;
  const auto start = std::chrono::steady_clock::now();
  const auto result = train::train(model::MolSetsModel(config), train_set, val_set, tc);
  const auto report = train::evaluate(result.model, test_set);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = report.pearson_rp >= 0.9 && report.spearman_rs >= 0.9 && secs <= 600.0;
  return {ok, "GraphConv, 500 train / 100 val / 100 test, " + std::to_string(result.history.size()) +
                  " epochs, batch 8: r_p = " + fmt("%.4f", report.pearson_rp) + ", r_s = " + fmt("%.4f", report.spearman_rs) +
                  ", " + fmt("%.1f", secs) + " s"};
}

Outcome smiles_corpus() {
  std::size_t ok = 0, total = 0;
  for (const auto& f : testing::kScreeningCorpus) {
    ++total;
    try {
      const auto parts = chem::parse_smiles(f.smiles);
      const auto g = chem::build_graph(f.smiles);
      if (parts.size() == f.components && g.num_nodes() == f.atoms && g.num_edges() == f.bonds) ++ok;
    } catch (const std::exception&) {
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " SMILES parse with matching counts"};
}

struct RunArtifacts {
  std::string history, checkpoint, screening;
};

RunArtifacts deterministic_run() {
  const auto records = data::generate_synthetic(150, 20260909, 0.05);
  const auto split = data::split_dataset(records, {3, 1, 1}, 5);
  model::ModelConfig config = model::ModelConfig::defaults(gnn::ConvKind::GATConv);
  config.seed = 11;
  train::TrainConfig tc;
  tc.seed = 12;
  tc.max_epochs = 15;
  const auto result = train::train(model::MolSetsModel(config), train::PreparedDataset::from_records(split.train),
                                   train::PreparedDataset::from_records(split.validation), tc);
  RunArtifacts out;
  std::ostringstream history, csv;
  train::write_history(history, result.history);
  out.history = history.str();
  out.checkpoint = model::checkpoint_to_json(result.model);
  const auto candidates =
      screening::enumerate_binary_candidates(testing::screening_solvents(), testing::screening_salts());
  screening::write_screening_csv(csv, screening::run_screening(result.model, candidates).results);
  out.screening = csv.str();
  return out;
}

Outcome determinism() {
  const RunArtifacts a = deterministic_run();
  const RunArtifacts b = deterministic_run();
  const bool h = a.history == b.history, c = a.checkpoint == b.checkpoint, s = a.screening == b.screening;
  auto word = [](bool same) { return same ? "identical" : "DIFFERENT"; };
  return {h && c && s, std::string("history ") + word(h) + ", checkpoint " + word(c) + ", screening CSV " + word(s) +
                           " (" + std::to_string(a.screening.size()) + " bytes)"};
}

Outcome screening_throughput() {
  model::ModelConfig config = model::ModelConfig::defaults(gnn::ConvKind::GraphConv);
  config.seed = 3;
  const model::MolSetsModel model(config);
  const auto start = std::chrono::steady_clock::now();
  const auto candidates =
      screening::enumerate_binary_candidates(testing::screening_solvents(), testing::screening_salts());
  const auto report = screening::run_screening(model, candidates, {true, 1});
  std::ostringstream csv;
  screening::write_screening_csv(csv, report.results);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = report.results.size() == 11340 && secs <= 60.0;
  return {ok, std::to_string(report.results.size()) + " candidates scored with the embedding cache on 1 thread in " +
                  fmt("%.2f", secs) + " s"};
}

}  // namespace

int main() {
  set_log_level(LogLevel::Error);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"permutation invariance", permutation_invariance},
      {"concat ablation is order dependent", concat_sensitivity},
      {"gradient correctness", gradient_check},
      {"Arrhenius oracle", arrhenius},
      {"enumeration count", enumeration},
      {"metric oracles", metric_oracles},
      {"synthetic end-to-end learning", synthetic_learning},
      {"SMILES corpus", smiles_corpus},
      {"determinism", determinism},
      {"screening throughput", screening_throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome = checks[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.2f s]\n", outcome.pass ? "PASS" : "FAIL", i + 1, checks[i].first,
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu acceptance checks passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed;
}
