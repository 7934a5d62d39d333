// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace molsets::data {

inline constexpr std::size_t kMaxSolvents = 4;
inline constexpr double kRoomTemperature = 298.0;
/// A measured point counts as the room-temperature value within this window (K).
inline constexpr double kRoomTemperatureTolerance = 0.5;
inline constexpr double kGasConstant = 8.314;  // J mol^-1 K^-1

struct ConductivityPoint {
  double temperature_k = 0.0;
  double log10_sigma = 0.0;  // sigma in S/cm

  friend bool operator==(const ConductivityPoint&, const ConductivityPoint&) = default;
};

struct MixtureRecord {
  std::string mixture_id;
  std::vector<std::string> solvent_smiles;
  std::vector<double> weight_fractions;
  std::vector<std::optional<double>> mol_weight_overrides;  // Da
  std::string salt_smiles;
  double molality = 0.0;  // mol/kg
  std::vector<ConductivityPoint> points;
  std::optional<double> target_298k;  // log10 S/cm

  /// Throws DataError on count mismatches, weights not summing to 1, or bad values.
  void validate() const;
  friend bool operator==(const MixtureRecord&, const MixtureRecord&) = default;
};

/// log10(sigma) = slope_k / T + intercept_b, fitted by ordinary least squares.
struct ArrheniusFit {
  double slope_k = 0.0;      // K
  double intercept_b = 0.0;  // log10 of the pre-exponential conductivity
  std::size_t n_points = 0;
  double r_squared = 0.0;

  double predict(double temperature_k) const { return slope_k / temperature_k + intercept_b; }
  /// E_a in J/mol under the base-10 convention, -k R ln 10.
  double activation_energy() const;
};

enum class LoadMode { Strict, Lenient };

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::vector<std::string> messages;
};

/// CSV columns, in write order.
const std::vector<std::string>& csv_columns();

std::vector<MixtureRecord> read_dataset(std::istream& in, LoadMode mode = LoadMode::Strict,
                                        LoadReport* report = nullptr);
std::vector<MixtureRecord> load_dataset(const std::string& path, LoadMode mode = LoadMode::Strict,
                                        LoadReport* report = nullptr);
/// One row per conductivity point. A record without points but with a target
/// is written as a single row at 298 K.
void write_dataset(std::ostream& out, std::span<const MixtureRecord> records);
void save_dataset(const std::string& path, std::span<const MixtureRecord> records);

/// Needs at least two distinct temperatures; throws DataError otherwise.
ArrheniusFit arrhenius_fit(std::span<const ConductivityPoint> points);

/// Measured value within 0.5 K of 298 K if present, else the Arrhenius
/// extrapolation; an explicit target_298k wins over both.
double conductivity_at_298k(const MixtureRecord& record);

/// Replaces each record's points by a single 298 K point holding its target.
/// Lenient mode drops records without a usable target and reports them.
std::vector<MixtureRecord> prepare_targets(std::span<const MixtureRecord> records, LoadMode mode = LoadMode::Strict,
                                           LoadReport* report = nullptr);

struct Split {
  std::vector<MixtureRecord> train;
  std::vector<MixtureRecord> validation;
  std::vector<MixtureRecord> test;
};

/// Seeded shuffle followed by a contiguous partition at the rounded ratio boundaries.
Split split_dataset(std::span<const MixtureRecord> records, std::array<double, 3> ratios, std::uint64_t seed);
/// Index form of split_dataset.
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, std::array<double, 3> ratios,
                                                      std::uint64_t seed);

struct PoolMolecule {
  std::string smiles;
  std::optional<double> mol_weight;  // reported polymer molecular weight
};

const std::vector<PoolMolecule>& synthetic_solvent_pool();
const std::vector<PoolMolecule>& synthetic_salt_pool();

/// Noise-free synthetic log10 conductivity of a record (see README for the formula).
double synthetic_ground_truth(const MixtureRecord& record);

/// Random mixtures of 1-4 pool solvents with one pool salt; targets follow
/// synthetic_ground_truth plus N(0, noise_std^2) noise.
std::vector<MixtureRecord> generate_synthetic(std::size_t n, std::uint64_t seed, double noise_std = 0.0);

}  // namespace molsets::data
