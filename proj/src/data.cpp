// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "molsets/chem_graph.hpp"
#include "molsets/error.hpp"
#include "molsets/log.hpp"
#include "molsets/rng.hpp"

namespace molsets::data {
namespace {

std::string slot(const char* stem, std::size_t i) { return std::string(stem) + std::to_string(i + 1); }

struct RowError {
  std::string message;
};

double require_number(const std::string& field, const std::string& column) {
  auto value = csv::parse_double(field);
  if (!value || !std::isfinite(*value)) throw RowError{"non-numeric value '" + field + "' in column " + column};
  return *value;
}

bool same_composition(const MixtureRecord& a, const MixtureRecord& b) {
  return a.solvent_smiles == b.solvent_smiles && a.weight_fractions == b.weight_fractions &&
         a.mol_weight_overrides == b.mol_weight_overrides && a.salt_smiles == b.salt_smiles &&
         a.molality == b.molality;
}

struct Descriptors {
  double heavy = 0.0;
  double oxygen = 0.0;
  double nitrogen = 0.0;
  double fluorine = 0.0;
  double log_m = 0.0;
};

Descriptors describe(const std::string& smiles, std::optional<double> mol_weight) {
  const chem::MolecularGraph graph = chem::build_graph(smiles, mol_weight);
  Descriptors d;
  d.heavy = static_cast<double>(graph.num_nodes());
  for (const chem::Atom& atom : graph.atoms()) {
    if (atom.element == chem::Element::O) d.oxygen += 1.0;
    if (atom.element == chem::Element::N) d.nitrogen += 1.0;
    if (atom.element == chem::Element::F) d.fluorine += 1.0;
  }
  d.log_m = graph.log_mol_weight();
  return d;
}

}  // namespace

void MixtureRecord::validate() const {
  const std::size_t n = solvent_smiles.size();
  if (n < 1 || n > kMaxSolvents) {
    throw DataError("mixture '" + mixture_id + "' has " + std::to_string(n) + " solvents, expected 1-4");
  }
  if (weight_fractions.size() != n) throw DataError("mixture '" + mixture_id + "': weight count mismatch");
  if (!mol_weight_overrides.empty() && mol_weight_overrides.size() != n) {
    throw DataError("mixture '" + mixture_id + "': molecular weight count mismatch");
  }
  double total = 0.0;
  for (double w : weight_fractions) {
    if (!(w >= 0.0 && w <= 1.0)) throw DataError("mixture '" + mixture_id + "': weight fraction outside [0, 1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw DataError("mixture '" + mixture_id + "': weight fractions sum to " + csv::format_double(total));
  }
  for (const auto& m : mol_weight_overrides) {
    if (m && !(*m > 0.0)) throw DataError("mixture '" + mixture_id + "': molecular weight must be positive");
  }
  if (salt_smiles.empty()) throw DataError("mixture '" + mixture_id + "': missing salt");
  if (!(molality >= 0.0) || !std::isfinite(molality)) {
    throw DataError("mixture '" + mixture_id + "': molality must be >= 0");
  }
  for (const ConductivityPoint& p : points) {
    if (!(p.temperature_k > 0.0) || !std::isfinite(p.temperature_k)) {
      throw DataError("mixture '" + mixture_id + "': temperature must be positive");
    }
  }
}

double ArrheniusFit::activation_energy() const { return -slope_k * kGasConstant * std::log(10.0); }

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c{"mixture_id"};
    for (std::size_t i = 0; i < kMaxSolvents; ++i) c.push_back(slot("solvent_smiles_", i));
    for (std::size_t i = 0; i < kMaxSolvents; ++i) c.push_back(slot("weight_frac_", i));
    for (std::size_t i = 0; i < kMaxSolvents; ++i) c.push_back(slot("mol_weight_", i));
    c.insert(c.end(), {"salt_smiles", "molality_mol_per_kg", "temperature_K", "log10_conductivity_S_per_cm"});
    return c;
  }();
  return columns;
}

std::vector<MixtureRecord> read_dataset(std::istream& in, LoadMode mode, LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::vector<MixtureRecord> records;
  std::string line;
  if (!csv::read_line(in, line)) {
    log_warning("dataset is empty");
    return records;
  }
  const auto header = csv::split_row(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const std::string& name : csv_columns()) {
    if (!column.count(name)) throw DataError("line 1: missing column '" + name + "'");
  }

  std::map<std::string, std::size_t> by_id;
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++rep.rows_read;
    try {
      const auto fields = csv::split_row(line);
      if (fields.size() != header.size()) {
        throw RowError{"expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size())};
      }
      auto get = [&](const std::string& name) -> const std::string& { return fields[column.at(name)]; };

      MixtureRecord record;
      record.mixture_id = get("mixture_id");
      if (record.mixture_id.empty()) throw RowError{"empty mixture_id"};
      bool any_override = false;
      for (std::size_t i = 0; i < kMaxSolvents; ++i) {
        const std::string& smiles = get(slot("solvent_smiles_", i));
        const std::string& weight = get(slot("weight_frac_", i));
        const std::string& mw = get(slot("mol_weight_", i));
        if (smiles.empty()) {
          if (!weight.empty() || !mw.empty()) throw RowError{"values in unused solvent slot " + std::to_string(i + 1)};
          continue;
        }
        record.solvent_smiles.push_back(smiles);
        record.weight_fractions.push_back(require_number(weight, slot("weight_frac_", i)));
        if (mw.empty()) {
          record.mol_weight_overrides.emplace_back();
        } else {
          record.mol_weight_overrides.emplace_back(require_number(mw, slot("mol_weight_", i)));
          any_override = true;
        }
      }
      if (!any_override) record.mol_weight_overrides.assign(record.solvent_smiles.size(), std::nullopt);
      record.salt_smiles = get("salt_smiles");
      record.molality = require_number(get("molality_mol_per_kg"), "molality_mol_per_kg");
      record.points.push_back({require_number(get("temperature_K"), "temperature_K"),
                               require_number(get("log10_conductivity_S_per_cm"), "log10_conductivity_S_per_cm")});
      try {
        record.validate();
      } catch (const DataError& e) {
        throw RowError{e.what()};
      }

      auto [it, inserted] = by_id.emplace(record.mixture_id, records.size());
      if (inserted) {
        records.push_back(std::move(record));
      } else {
        MixtureRecord& existing = records[it->second];
        if (!same_composition(existing, record)) {
          throw RowError{"mixture '" + record.mixture_id + "' repeats with a different composition"};
        }
        existing.points.push_back(record.points.front());
      }
    } catch (const RowError& e) {
      const std::string message = "line " + std::to_string(line_no) + ": " + e.message;
      if (mode == LoadMode::Strict) throw DataError(message);
      ++rep.rows_skipped;
      rep.messages.push_back(message);
      log_warning("skipping " + message);
    }
  }
  if (records.empty()) log_warning("dataset has no records");
  return records;
}

std::vector<MixtureRecord> load_dataset(const std::string& path, LoadMode mode, LoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_dataset(in, mode, report);
}

void write_dataset(std::ostream& out, std::span<const MixtureRecord> records) {
  const auto& columns = csv_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const MixtureRecord& r : records) {
    std::vector<ConductivityPoint> points = r.points;
    if (points.empty()) {
      if (!r.target_298k) throw DataError("mixture '" + r.mixture_id + "' has neither points nor a target");
      points.push_back({kRoomTemperature, *r.target_298k});
    }
    for (const ConductivityPoint& p : points) {
      std::string row = csv::quote_if_needed(r.mixture_id);
      for (std::size_t i = 0; i < kMaxSolvents; ++i) {
        row += ',';
        if (i < r.solvent_smiles.size()) row += csv::quote_if_needed(r.solvent_smiles[i]);
      }
      for (std::size_t i = 0; i < kMaxSolvents; ++i) {
        row += ',';
        if (i < r.weight_fractions.size()) row += csv::format_double(r.weight_fractions[i]);
      }
      for (std::size_t i = 0; i < kMaxSolvents; ++i) {
        row += ',';
        if (i < r.mol_weight_overrides.size() && r.mol_weight_overrides[i]) {
          row += csv::format_double(*r.mol_weight_overrides[i]);
        }
      }
      row += ',' + csv::quote_if_needed(r.salt_smiles);
      row += ',' + csv::format_double(r.molality);
      row += ',' + csv::format_double(p.temperature_k);
      row += ',' + csv::format_double(p.log10_sigma);
      out << row << '\n';
    }
  }
}

void save_dataset(const std::string& path, std::span<const MixtureRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset '" + path + "'");
  write_dataset(out, records);
  if (!out) throw DataError("failed writing dataset '" + path + "'");
}

ArrheniusFit arrhenius_fit(std::span<const ConductivityPoint> points) {
  std::vector<double> x, y;
  for (const ConductivityPoint& p : points) {
    if (!(p.temperature_k > 0.0)) throw DataError("Arrhenius fit: temperature must be positive");
    x.push_back(1.0 / p.temperature_k);
    y.push_back(p.log10_sigma);
  }
  std::vector<double> distinct;
  for (const ConductivityPoint& p : points) distinct.push_back(p.temperature_k);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw DataError("Arrhenius fit needs at least two distinct temperatures");

  const double n = static_cast<double>(x.size());
  const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxy += (x[i] - mean_x) * (y[i] - mean_y);
    syy += (y[i] - mean_y) * (y[i] - mean_y);
  }
  ArrheniusFit fit;
  fit.slope_k = sxy / sxx;
  fit.intercept_b = mean_y - fit.slope_k * mean_x;
  fit.n_points = x.size();
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.predict(points[i].temperature_k);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

double conductivity_at_298k(const MixtureRecord& record) {
  if (record.target_298k) return *record.target_298k;
  for (const ConductivityPoint& p : record.points) {
    if (std::abs(p.temperature_k - kRoomTemperature) <= kRoomTemperatureTolerance) return p.log10_sigma;
  }
  try {
    return arrhenius_fit(record.points).predict(kRoomTemperature);
  } catch (const DataError&) {
    throw DataError("mixture '" + record.mixture_id +
                    "' has no 298 K measurement and fewer than two distinct temperatures");
  }
}

std::vector<MixtureRecord> prepare_targets(std::span<const MixtureRecord> records, LoadMode mode,
                                           LoadReport* report) {
  std::vector<MixtureRecord> prepared;
  for (const MixtureRecord& record : records) {
    try {
      MixtureRecord out = record;
      const double target = conductivity_at_298k(record);
      out.points = {{kRoomTemperature, target}};
      out.target_298k.reset();
      prepared.push_back(std::move(out));
    } catch (const DataError& e) {
      if (mode == LoadMode::Strict) throw;
      if (report) {
        ++report->rows_skipped;
        report->messages.emplace_back(e.what());
      }
      log_warning(std::string("dropping record: ") + e.what());
    }
  }
  return prepared;
}

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, std::array<double, 3> ratios,
                                                      std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ContractError("split ratios must be positive");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const double total = ratios[0] + ratios[1] + ratios[2];
  const auto first = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[0] / total));
  const auto second = std::max(
      first, static_cast<std::size_t>(std::llround(static_cast<double>(n) * (ratios[0] + ratios[1]) / total)));
  std::array<std::vector<std::size_t>, 3> parts;
  parts[0].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(first, n)));
  parts[1].assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(first, n)),
                  order.begin() + static_cast<std::ptrdiff_t>(std::min(second, n)));
  parts[2].assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(second, n)), order.end());
  return parts;
}

Split split_dataset(std::span<const MixtureRecord> records, std::array<double, 3> ratios, std::uint64_t seed) {
  const auto parts = split_indices(records.size(), ratios, seed);
  Split split;
  for (std::size_t i : parts[0]) split.train.push_back(records[i]);
  for (std::size_t i : parts[1]) split.validation.push_back(records[i]);
  for (std::size_t i : parts[2]) split.test.push_back(records[i]);
  return split;
}

const std::vector<PoolMolecule>& synthetic_solvent_pool() {
  static const std::vector<PoolMolecule> pool{
      {"C1=CC=CC=C1", std::nullopt},
      {"COCOC", std::nullopt},
      {"C1CC1", std::nullopt},
      {"COCCOC", std::nullopt},
      {"CC1=CC=CC=C1", std::nullopt},
      {"CC1CCCO1", std::nullopt},
      {"C1CCOC1", std::nullopt},
      {"FC(F)(C1=NC(C#N)=C([N-]1)C#N)F.CCCCN2C=C[N+](C)=C2", std::nullopt},
      {"C1COC(=O)O1", std::nullopt},
      {"CC1COC(=O)O1", std::nullopt},
      {"COC(=O)OC", std::nullopt},
      {"CCOC(=O)OCC", std::nullopt},
      {"CC#N", std::nullopt},
      {"[Cu]CCO[Au]", 100000.0},
      {"[Cu]CC(C)O[Au]", 4000.0},
  };
  return pool;
}

const std::vector<PoolMolecule>& synthetic_salt_pool() {
  static const std::vector<PoolMolecule> pool{
      {"F[P-](F)(F)(F)(F)F.[Li+]", std::nullopt},
      {"[Li+].FC(F)(F)S(=O)(=O)[N-]S(=O)(=O)C(F)(F)F", std::nullopt},
      {"[Li+].F[B-](F)(F)F", std::nullopt},
      {"[Li+].[O-]Cl(=O)(=O)=O", std::nullopt},
  };
  return pool;
}

double synthetic_ground_truth(const MixtureRecord& record) {
  record.validate();
  std::vector<double> score;
  for (std::size_t i = 0; i < record.solvent_smiles.size(); ++i) {
    const auto override = record.mol_weight_overrides.empty() ? std::nullopt : record.mol_weight_overrides[i];
    const Descriptors d = describe(record.solvent_smiles[i], override);
    score.push_back(0.8 * (d.oxygen + d.nitrogen) / d.heavy - 0.25 * (d.log_m - 2.0));
  }
  const auto& w = record.weight_fractions;
  double linear = 0.0, mixing = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    linear += w[i] * score[i];
    for (std::size_t j = i + 1; j < score.size(); ++j) {
      mixing += w[i] * w[j] * (score[i] - score[j]) * (score[i] - score[j]);
    }
  }
  const Descriptors salt = describe(record.salt_smiles, std::nullopt);
  const double salt_term = 0.3 * salt.fluorine / salt.heavy - 0.02 * salt.heavy;
  const double m = record.molality;
  return -2.5 + linear + 0.5 * mixing + salt_term + 0.6 * m - 0.25 * m * m;
}

std::vector<MixtureRecord> generate_synthetic(std::size_t n, std::uint64_t seed, double noise_std) {
  if (n < 1) throw ContractError("synthetic corpus size must be at least 1");
  if (!(noise_std >= 0.0)) throw ContractError("noise scale must be >= 0");
  const auto& solvents = synthetic_solvent_pool();
  const auto& salts = synthetic_salt_pool();
  Rng rng(seed);
  std::vector<MixtureRecord> records;
  records.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    MixtureRecord record;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05zu", r);
    record.mixture_id = id;

    const std::size_t k = 1 + rng.below(kMaxSolvents);
    std::vector<std::size_t> pick(solvents.size());
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    for (std::size_t t = 0; t < k; ++t) std::swap(pick[t], pick[t + rng.below(pick.size() - t)]);
    std::vector<double> raw(k);
    for (double& v : raw) v = rng.uniform(0.05, 1.0);
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (std::size_t t = 0; t < k; ++t) {
      record.solvent_smiles.push_back(solvents[pick[t]].smiles);
      record.mol_weight_overrides.push_back(solvents[pick[t]].mol_weight);
      record.weight_fractions.push_back(raw[t] / total);
    }
    record.salt_smiles = salts[rng.below(salts.size())].smiles;
    record.molality = rng.uniform(0.5, 2.0);
    const double noise = rng.normal();
    const double target = synthetic_ground_truth(record) + noise_std * noise;
    record.target_298k = target;
    record.points = {{kRoomTemperature, target}};
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace molsets::data
