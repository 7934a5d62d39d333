// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "molsets/data.hpp"
#include "molsets/model.hpp"

namespace molsets::screening {

/// Equal-weight binary mixture with one salt at 1 mol/kg; solvent_a < solvent_b.
struct CandidateSpec {
  std::string solvent_a;
  std::string solvent_b;
  std::array<double, 2> weights = {0.5, 0.5};
  std::string salt;
  double molality = 1.0;
};

struct ScreeningResult {
  CandidateSpec candidate;
  double predicted_log10_sigma = 0.0;
};

/// All unordered distinct solvent pairs times all salts, C(n, 2) * s
/// candidates in lexicographic order. Inputs must be distinct, n >= 2, s >= 1.
std::vector<CandidateSpec> enumerate_binary_candidates(std::span<const std::string> solvents,
                                                       std::span<const std::string> salts);

/// Newline-delimited SMILES; blank lines and lines starting with '#' are skipped.
std::vector<std::string> read_smiles_list(const std::string& path);

struct ScreeningOptions {
  bool use_cache = true;     // embed each distinct SMILES once per pathway
  std::size_t threads = 1;   // candidate predictions fan out over this many workers
};

struct ScreeningReport {
  std::vector<ScreeningResult> results;  // descending prediction, ties in input order
  std::vector<std::string> skipped;      // one line per candidate that could not be scored
  std::size_t num_candidates = 0;
  bool partial() const { return !skipped.empty(); }
};

ScreeningReport run_screening(const model::MolSetsModel& model, std::span<const CandidateSpec> candidates,
                              const ScreeningOptions& options = {});

/// Columns solvent_1, solvent_2, salt, molality, predicted_log10_conductivity.
void write_screening_csv(std::ostream& out, std::span<const ScreeningResult> results);

/// Applies a seeded non-identity permutation to the solvent-aligned fields.
data::MixtureRecord permute_mixture(const data::MixtureRecord& record, std::uint64_t seed);

struct PermutationReport {
  std::size_t num_tested = 0;
  std::size_t num_skipped = 0;  // single-solvent records
  double max_abs_diff = 0.0;
  double mean_abs_diff = 0.0;
  double fraction_changed = 0.0;  // share of records whose prediction moved by more than 1e-6
};

inline constexpr double kChangeThreshold = 1e-6;

/// Predicts every multi-solvent record before and after permute_mixture, in
/// the given solvent order, and summarizes the differences.
PermutationReport permutation_test(const model::MolSetsModel& model, std::span<const data::MixtureRecord> records,
                                   std::uint64_t seed);

/// CSV with mixture_id followed by one column per representation component.
void write_representations(std::ostream& out, const model::MolSetsModel& model,
                           std::span<const data::MixtureRecord> records);

}  // namespace molsets::screening
