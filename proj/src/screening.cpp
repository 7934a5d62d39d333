// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/screening.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include "csv.hpp"
#include "molsets/error.hpp"
#include "molsets/log.hpp"
#include "molsets/rng.hpp"

namespace molsets::screening {
namespace {

void require_distinct(std::span<const std::string> items, const char* what) {
  std::set<std::string> seen;
  for (const std::string& s : items) {
    if (s.empty()) throw DataError(std::string("empty ") + what + " SMILES");
    if (!seen.insert(s).second) throw DataError(std::string("duplicate ") + what + " '" + s + "'");
  }
}

std::optional<chem::MolecularGraph> try_build(const std::string& smiles, std::string& error) {
  try {
    return chem::build_graph(smiles);
  } catch (const Error& e) {
    error = e.what();
    return std::nullopt;
  }
}

using GraphTable = std::map<std::string, std::optional<chem::MolecularGraph>>;

struct Embeddings {
  std::map<std::string, ad::Tensor> solvent;
  std::map<std::string, ad::Tensor> salt;
};

ad::Tensor embed(const model::MolSetsModel& model, model::Pathway pathway, const chem::MolecularGraph& graph) {
  ad::Tape tape;
  ad::ParameterBinding bind(tape, model.parameters(), false);
  return model.embed_molecule(bind, pathway, graph).value();
}

double predict_cached(const model::MolSetsModel& model, const Embeddings& emb, const GraphTable& graphs,
                      const CandidateSpec& c) {
  const chem::MolecularGraph* pair[2] = {&*graphs.at(c.solvent_a), &*graphs.at(c.solvent_b)};
  const std::string* names[2] = {&c.solvent_a, &c.solvent_b};
  std::vector<std::size_t> order{0, 1};
  if (model.config().variant != model::Variant::Concat) order = model::canonical_solvent_order(pair, c.weights);
  ad::Tape tape;
  ad::ParameterBinding bind(tape, model.parameters(), false);
  std::vector<ad::Var> reprs;
  std::vector<double> weights;
  for (std::size_t k : order) {
    reprs.push_back(tape.constant(emb.solvent.at(*names[k])));
    weights.push_back(c.weights[k]);
  }
  ad::Var salt = tape.constant(emb.salt.at(c.salt));
  return model.forward(bind, reprs, weights, salt, c.molality).value().item();
}

double predict_uncached(const model::MolSetsModel& model, const GraphTable& graphs, const CandidateSpec& c) {
  model::MixtureInput mix;
  mix.solvents.push_back({*graphs.at(c.solvent_a), c.weights[0]});
  mix.solvents.push_back({*graphs.at(c.solvent_b), c.weights[1]});
  mix.salt = *graphs.at(c.salt);
  mix.molality = c.molality;
  return model.predict(mix);
}

std::string format_fixed(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6f", value);
  return buffer;
}

}  // namespace

std::vector<CandidateSpec> enumerate_binary_candidates(std::span<const std::string> solvents,
                                                       std::span<const std::string> salts) {
  if (solvents.size() < 2) throw DataError("screening needs at least two solvents");
  if (salts.empty()) throw DataError("screening needs at least one salt");
  require_distinct(solvents, "solvent");
  require_distinct(salts, "salt");
  std::vector<std::string> sorted_solvents(solvents.begin(), solvents.end());
  std::vector<std::string> sorted_salts(salts.begin(), salts.end());
  std::sort(sorted_solvents.begin(), sorted_solvents.end());
  std::sort(sorted_salts.begin(), sorted_salts.end());
  std::vector<CandidateSpec> out;
  out.reserve(solvents.size() * (solvents.size() - 1) / 2 * salts.size());
  for (std::size_t i = 0; i < sorted_solvents.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted_solvents.size(); ++j) {
      for (const std::string& salt : sorted_salts) {
        CandidateSpec c;
        c.solvent_a = sorted_solvents[i];
        c.solvent_b = sorted_solvents[j];
        c.salt = salt;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

std::vector<std::string> read_smiles_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open SMILES list '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (csv::read_line(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    out.push_back(line.substr(first, last - first + 1));
  }
  return out;
}

ScreeningReport run_screening(const model::MolSetsModel& model, std::span<const CandidateSpec> candidates,
                              const ScreeningOptions& options) {
  ScreeningReport report;
  report.num_candidates = candidates.size();

  GraphTable graphs;
  std::map<std::string, std::string> errors;
  auto intern = [&](const std::string& smiles) {
    if (graphs.count(smiles)) return;
    std::string error;
    graphs.emplace(smiles, try_build(smiles, error));
    if (!error.empty()) errors.emplace(smiles, error);
  };
  for (const CandidateSpec& c : candidates) {
    intern(c.solvent_a);
    intern(c.solvent_b);
    intern(c.salt);
  }

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CandidateSpec& c = candidates[i];
    std::string reason;
    for (const std::string* s : {&c.solvent_a, &c.solvent_b, &c.salt}) {
      if (!graphs.at(*s)) reason = "'" + *s + "': " + errors.at(*s);
    }
    if (reason.empty()) {
      usable.push_back(i);
    } else {
      report.skipped.push_back("candidate " + std::to_string(i + 1) + " (" + c.solvent_a + " + " + c.solvent_b +
                               " / " + c.salt + ") skipped: " + reason);
    }
  }

  Embeddings emb;
  if (options.use_cache) {
    for (std::size_t i : usable) {
      const CandidateSpec& c = candidates[i];
      for (const std::string* s : {&c.solvent_a, &c.solvent_b}) {
        if (!emb.solvent.count(*s)) emb.solvent.emplace(*s, embed(model, model::Pathway::Solvent, *graphs.at(*s)));
      }
      if (!emb.salt.count(c.salt)) emb.salt.emplace(c.salt, embed(model, model::Pathway::Salt, *graphs.at(c.salt)));
    }
  }

  std::vector<double> preds(usable.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const CandidateSpec& c = candidates[usable[k]];
      preds[k] = options.use_cache ? predict_cached(model, emb, graphs, c) : predict_uncached(model, graphs, c);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, usable.size()));
  if (threads == 1) {
    work(0, usable.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(threads);
    const std::size_t chunk = (usable.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(std::min(usable.size(), t * chunk), std::min(usable.size(), (t + 1) * chunk));
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  for (std::size_t k = 0; k < usable.size(); ++k) {
    if (!std::isfinite(preds[k])) throw NumericError("non-finite prediction for candidate " + std::to_string(usable[k] + 1));
    report.results.push_back({candidates[usable[k]], preds[k]});
  }
  std::stable_sort(report.results.begin(), report.results.end(),
                   [](const ScreeningResult& a, const ScreeningResult& b) {
                     return a.predicted_log10_sigma > b.predicted_log10_sigma;
                   });
  for (const std::string& line : report.skipped) log_warning(line);
  return report;
}

void write_screening_csv(std::ostream& out, std::span<const ScreeningResult> results) {
  out << "solvent_1,solvent_2,salt,molality,predicted_log10_conductivity\n";
  for (const ScreeningResult& r : results) {
    out << csv::quote_if_needed(r.candidate.solvent_a) << ',' << csv::quote_if_needed(r.candidate.solvent_b) << ','
        << csv::quote_if_needed(r.candidate.salt) << ',' << csv::format_double(r.candidate.molality) << ','
        << format_fixed(r.predicted_log10_sigma) << '\n';
  }
}

data::MixtureRecord permute_mixture(const data::MixtureRecord& record, std::uint64_t seed) {
  const std::size_t n = record.solvent_smiles.size();
  if (n < 2) throw ContractError("mixture '" + record.mixture_id + "' has fewer than two solvents to permute");
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto is_identity = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (perm[i] != i) return false;
    }
    return true;
  };
  do {
    rng.shuffle(std::span<std::size_t>(perm));
  } while (is_identity());

  data::MixtureRecord out = record;
  for (std::size_t i = 0; i < n; ++i) {
    out.solvent_smiles[i] = record.solvent_smiles[perm[i]];
    out.weight_fractions[i] = record.weight_fractions[perm[i]];
    if (!record.mol_weight_overrides.empty()) out.mol_weight_overrides[i] = record.mol_weight_overrides[perm[i]];
  }
  return out;
}

namespace {

model::MixtureInput to_input(const data::MixtureRecord& record) {
  record.validate();
  model::MixtureInput mix;
  for (std::size_t i = 0; i < record.solvent_smiles.size(); ++i) {
    const auto mw = record.mol_weight_overrides.empty() ? std::nullopt : record.mol_weight_overrides[i];
    mix.solvents.push_back({chem::build_graph(record.solvent_smiles[i], mw), record.weight_fractions[i]});
  }
  mix.salt = chem::build_graph(record.salt_smiles);
  mix.molality = record.molality;
  return mix;
}

}  // namespace

PermutationReport permutation_test(const model::MolSetsModel& model, std::span<const data::MixtureRecord> records,
                                   std::uint64_t seed) {
  PermutationReport report;
  Rng rng(seed);
  double total = 0.0;
  std::size_t changed = 0;
  for (const data::MixtureRecord& record : records) {
    if (record.solvent_smiles.size() < 2) {
      ++report.num_skipped;
      continue;
    }
    const auto permuted = permute_mixture(record, rng.next_u64());
    const double before = model.predict(to_input(record), model::SolventOrder::AsGiven);
    const double after = model.predict(to_input(permuted), model::SolventOrder::AsGiven);
    const double diff = std::abs(before - after);
    report.max_abs_diff = std::max(report.max_abs_diff, diff);
    total += diff;
    if (diff > kChangeThreshold) ++changed;
    ++report.num_tested;
  }
  if (report.num_tested > 0) {
    report.mean_abs_diff = total / static_cast<double>(report.num_tested);
    report.fraction_changed = static_cast<double>(changed) / static_cast<double>(report.num_tested);
  }
  return report;
}

void write_representations(std::ostream& out, const model::MolSetsModel& model,
                           std::span<const data::MixtureRecord> records) {
  std::vector<std::vector<double>> rows;
  for (const data::MixtureRecord& record : records) rows.push_back(model.export_representation(to_input(record)));
  const std::size_t width = rows.empty() ? 0 : rows.front().size();
  out << "mixture_id";
  for (std::size_t d = 0; d < width; ++d) out << ",z_" << d;
  out << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << csv::quote_if_needed(records[i].mixture_id);
    for (double v : rows[i]) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

}  // namespace molsets::screening
