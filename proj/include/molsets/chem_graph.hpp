// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace molsets::chem {

/// Number of per-atom features: 7 one-hot element slots followed by 6 descriptors.
inline constexpr std::size_t kNodeFeatureDim = 13;
inline constexpr int kFeatureSchemaVersion = 1;

enum class Element { B, C, N, O, F, S, Cl, P, Li, Si, Na, K, Br, I };

struct ElementData {
  Element element;
  std::string_view symbol;
  int atomic_number;
  double mass;               // Da
  double electronegativity;  // Pauling
  double vdw_radius;         // Angstrom
  int default_valence;       // 0 for metals (never implicit-H bearing)
};

inline constexpr double kHydrogenMass = 1.008;

const ElementData& element_data(Element e);
std::optional<Element> element_from_symbol(std::string_view symbol);

struct Atom {
  Element element = Element::C;
  int formal_charge = 0;
  bool aromatic = false;
  bool bracket = false;
  std::optional<int> explicit_h;
  int implicit_h = 0;
};

/// Bond order code: 1, 1.5 (aromatic), 2 or 3.
struct Bond {
  std::size_t begin = 0;
  std::size_t end = 0;
  double order_code = 1.0;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
};

/// Parses a SMILES string into one Molecule per connected component.
///
/// Supported: organic-subset atoms (B C N O F S Cl P Br I), aromatic b c n o s,
/// bracket atoms with hydrogen count and charge, bonds - = # :, ring closures
/// 1-9 and %nn, branches and the '.' separator. The polymer placeholders
/// [Cu] and [Au] become carbon atoms. Stereo marks, isotopes and wildcards are
/// rejected. Implicit hydrogens are assigned on the returned atoms.
///
/// Throws ParseError carrying the offending character offset.
std::vector<Molecule> parse_smiles(std::string_view smiles);

/// Fills Atom::implicit_h from the bond order sums.
std::vector<Atom> assign_implicit_hydrogens(std::vector<Atom> atoms, const std::vector<Bond>& bonds);

std::array<double, kNodeFeatureDim> atom_features(const Atom& atom);

inline double bond_feature(const Bond& bond) { return bond.order_code; }

/// Sum of heavy-atom masses plus implicit hydrogens, in Da.
double molecular_weight(const std::vector<Atom>& atoms);

class MolecularGraph {
 public:
  MolecularGraph() = default;

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }

  /// Row-major num_nodes x kNodeFeatureDim.
  const std::vector<double>& node_features() const { return node_features_; }
  double feature(std::size_t node, std::size_t dim) const {
    return node_features_[node * kNodeFeatureDim + dim];
  }
  const std::vector<Bond>& edges() const { return edges_; }
  /// (neighbor, bond order code) pairs for `node`.
  const std::vector<std::pair<std::size_t, double>>& neighbors(std::size_t node) const {
    return adjacency_[node];
  }
  double log_mol_weight() const { return log_mol_weight_; }
  const std::string& source_smiles() const { return source_smiles_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  /// Relabels nodes: new node k is old node order[k]. Used by equivariance tests.
  MolecularGraph permuted(const std::vector<std::size_t>& order) const;

  friend MolecularGraph build_graph(std::string_view, std::optional<double>);

 private:
  void finalize();

  std::size_t num_nodes_ = 0;
  std::vector<double> node_features_;
  std::vector<Bond> edges_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency_;
  std::vector<Atom> atoms_;
  double log_mol_weight_ = 0.0;
  std::string source_smiles_;
};

/// Builds the featurized graph of a (possibly multi-component) SMILES string.
/// `mol_weight_override` (Da) replaces the computed molecular weight, which is
/// how reported polymer molecular weights enter the graph-level feature.
MolecularGraph build_graph(std::string_view smiles, std::optional<double> mol_weight_override = std::nullopt);

/// JSON text with node features, edge list and log molecular weight.
std::string graph_to_json(const MolecularGraph& graph);

}  // namespace molsets::chem
