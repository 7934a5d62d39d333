// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/chem_graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "molsets/error.hpp"
#include "molsets/log.hpp"

namespace molsets::chem {
namespace {

// Standard periodic-table reference values; vdW radii are Bondi radii.
constexpr std::array<ElementData, 14> kElements{{
    {Element::B, "B", 5, 10.81, 2.04, 1.92, 3},
    {Element::C, "C", 6, 12.011, 2.55, 1.70, 4},
    {Element::N, "N", 7, 14.007, 3.04, 1.55, 3},
    {Element::O, "O", 8, 15.999, 3.44, 1.52, 2},
    {Element::F, "F", 9, 18.998, 3.98, 1.47, 1},
    {Element::S, "S", 16, 32.06, 2.58, 1.80, 2},
    {Element::Cl, "Cl", 17, 35.45, 3.16, 1.75, 1},
    {Element::P, "P", 15, 30.974, 2.19, 1.80, 3},
    {Element::Li, "Li", 3, 6.94, 0.98, 1.82, 0},
    {Element::Si, "Si", 14, 28.085, 1.90, 2.10, 4},
    {Element::Na, "Na", 11, 22.990, 0.93, 2.27, 0},
    {Element::K, "K", 19, 39.098, 0.82, 2.75, 0},
    {Element::Br, "Br", 35, 79.904, 2.96, 1.85, 1},
    {Element::I, "I", 53, 126.90, 2.66, 1.98, 1},
}};

// Highest valence the organic-subset convention allows before an atom counts
// as over-bonded.
int max_standard_valence(Element e) {
  switch (e) {
    case Element::N:
    case Element::P: return 5;
    case Element::S: return 6;
    case Element::Cl:
    case Element::Br:
    case Element::I: return 7;
    default: return element_data(e).default_valence;
  }
}

bool is_placeholder(std::string_view symbol) { return symbol == "Cu" || symbol == "Au"; }

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  Molecule parse() {
    if (text_.empty()) throw ParseError("empty SMILES", 0);
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (static_cast<unsigned char>(c) > 127) throw ParseError("non-ASCII character", pos_);
      switch (c) {
        case '(': open_branch(); break;
        case ')': close_branch(); break;
        case '-':
        case '=':
        case '#':
        case ':': set_pending_bond(c); break;
        case '/':
        case '\\': throw ParseError("stereo bond markers are not supported", pos_);
        case '.': separate(); break;
        case '%': ring_closure(); break;
        case '[': bracket_atom(); break;
        case '*': throw ParseError("wildcard atoms are not supported", pos_);
        case '@': throw ParseError("chirality markers are not supported", pos_);
        default:
          if (std::isdigit(static_cast<unsigned char>(c))) {
            ring_closure();
          } else if (std::isalpha(static_cast<unsigned char>(c))) {
            organic_atom();
          } else {
            throw ParseError(std::string("unexpected character '") + c + "'", pos_);
          }
      }
    }
    if (!branches_.empty()) throw ParseError("unbalanced parentheses: unclosed '('", branches_.back().offset);
    if (!rings_.empty()) {
      const auto& [label, ring] = *rings_.begin();
      throw ParseError("unmatched ring-closure digit " + std::to_string(label), ring.offset);
    }
    if (pending_) throw ParseError("dangling bond symbol", pending_offset_);
    molecule_.atoms = assign_implicit_hydrogens(std::move(molecule_.atoms), molecule_.bonds);
    return std::move(molecule_);
  }

 private:
  struct Branch {
    std::size_t atom;
    std::size_t offset;
  };
  struct OpenRing {
    std::size_t atom;
    std::optional<char> bond;
    std::size_t offset;
  };

  void open_branch() {
    if (!previous_) throw ParseError("branch without a preceding atom", pos_);
    if (pending_) throw ParseError("bond symbol before '('", pending_offset_);
    branches_.push_back({*previous_, pos_});
    ++pos_;
  }

  void close_branch() {
    if (branches_.empty()) throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
    if (pending_) throw ParseError("dangling bond symbol", pending_offset_);
    previous_ = branches_.back().atom;
    branches_.pop_back();
    ++pos_;
  }

  void set_pending_bond(char c) {
    if (pending_) throw ParseError("consecutive bond symbols", pos_);
    if (!previous_) throw ParseError("bond symbol without a preceding atom", pos_);
    pending_ = c;
    pending_offset_ = pos_;
    ++pos_;
  }

  void separate() {
    if (pending_) throw ParseError("dangling bond symbol", pending_offset_);
    if (!previous_) throw ParseError("'.' without a preceding atom", pos_);
    if (!branches_.empty()) throw ParseError("'.' inside a branch", pos_);
    previous_.reset();
    ++pos_;
  }

  static double order_for(char symbol) {
    switch (symbol) {
      case '=': return 2.0;
      case '#': return 3.0;
      case ':': return 1.5;
      default: return 1.0;
    }
  }

  double default_order(std::size_t a, std::size_t b) const {
    return molecule_.atoms[a].aromatic && molecule_.atoms[b].aromatic ? 1.5 : 1.0;
  }

  void add_bond(std::size_t a, std::size_t b, double order, std::size_t offset) {
    if (a == b) throw ParseError("ring closure bonds an atom to itself", offset);
    for (const Bond& existing : molecule_.bonds) {
      if ((existing.begin == a && existing.end == b) || (existing.begin == b && existing.end == a)) {
        throw ParseError("duplicate bond between the same atoms", offset);
      }
    }
    molecule_.bonds.push_back({a, b, order});
  }

  void ring_closure() {
    const std::size_t start = pos_;
    if (!previous_) throw ParseError("ring-closure digit without a preceding atom", pos_);
    int label = 0;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        throw ParseError("'%' must be followed by two digits", pos_);
      }
      label = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      label = text_[pos_] - '0';
      if (label == 0) throw ParseError("ring-closure digit 0 is not supported", pos_);
      ++pos_;
    }
    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_.emplace(label, OpenRing{*previous_, pending_, start});
    } else {
      const OpenRing ring = it->second;
      rings_.erase(it);
      std::optional<char> symbol = ring.bond;
      if (pending_) {
        if (symbol && order_for(*symbol) != order_for(*pending_)) {
          throw ParseError("conflicting bond symbols on ring closure", pending_offset_);
        }
        symbol = pending_;
      }
      const double order = symbol ? order_for(*symbol) : default_order(ring.atom, *previous_);
      add_bond(ring.atom, *previous_, order, start);
    }
    pending_.reset();
  }

  void attach(Atom atom) {
    const std::size_t index = molecule_.atoms.size();
    molecule_.atoms.push_back(atom);
    if (previous_) {
      const double order = pending_ ? order_for(*pending_) : default_order(*previous_, index);
      add_bond(*previous_, index, order, pos_);
    } else if (pending_) {
      throw ParseError("bond symbol without a preceding atom", pending_offset_);
    }
    pending_.reset();
    previous_ = index;
  }

  void organic_atom() {
    const std::size_t start = pos_;
    Atom atom;
    auto two = text_.substr(pos_, 2);
    if (two == "Cl" || two == "Br") {
      atom.element = two == "Cl" ? Element::Cl : Element::Br;
      pos_ += 2;
    } else {
      const char c = text_[pos_];
      switch (c) {
        case 'B': atom.element = Element::B; break;
        case 'C': atom.element = Element::C; break;
        case 'N': atom.element = Element::N; break;
        case 'O': atom.element = Element::O; break;
        case 'F': atom.element = Element::F; break;
        case 'S': atom.element = Element::S; break;
        case 'P': atom.element = Element::P; break;
        case 'I': atom.element = Element::I; break;
        case 'b': atom.element = Element::B; atom.aromatic = true; break;
        case 'c': atom.element = Element::C; atom.aromatic = true; break;
        case 'n': atom.element = Element::N; atom.aromatic = true; break;
        case 'o': atom.element = Element::O; atom.aromatic = true; break;
        case 's': atom.element = Element::S; atom.aromatic = true; break;
        default:
          throw ParseError(std::string("unsupported element '") + c + "' (use bracket notation)", start);
      }
      ++pos_;
    }
    attach(atom);
  }

  void bracket_atom() {
    const std::size_t start = pos_;
    ++pos_;
    auto peek = [&]() -> char { return pos_ < text_.size() ? text_[pos_] : '\0'; };
    auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };

    if (is_digit(peek())) throw ParseError("isotopes are not supported", pos_);
    Atom atom;
    atom.bracket = true;

    const char first = peek();
    if (std::isupper(static_cast<unsigned char>(first))) {
      std::string symbol(1, first);
      const char second = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
      if (std::islower(static_cast<unsigned char>(second))) {
        std::string candidate = symbol + second;
        if (element_from_symbol(candidate) || is_placeholder(candidate)) {
          symbol = candidate;
        } else if (!element_from_symbol(symbol)) {
          throw ParseError("unsupported element '" + candidate + "'", pos_);
        }
      }
      if (is_placeholder(symbol)) {
        // Polymer connection sites become ordinary carbons.
        atom.element = Element::C;
        atom.bracket = false;
      } else if (auto e = element_from_symbol(symbol)) {
        atom.element = *e;
      } else {
        throw ParseError("unsupported element '" + symbol + "'", pos_);
      }
      pos_ += symbol.size();
    } else if (first == 'b' || first == 'c' || first == 'n' || first == 'o' || first == 's') {
      atom.element = *element_from_symbol(std::string(1, static_cast<char>(std::toupper(first))));
      atom.aromatic = true;
      ++pos_;
    } else if (first == '*') {
      throw ParseError("wildcard atoms are not supported", pos_);
    } else {
      throw ParseError("malformed bracket atom", start);
    }

    if (peek() == '@') throw ParseError("chirality markers are not supported", pos_);
    if (peek() == 'H') {
      ++pos_;
      int count = 1;
      if (is_digit(peek())) {
        count = peek() - '0';
        ++pos_;
      }
      atom.explicit_h = count;
    }
    if (peek() == '+' || peek() == '-') {
      const char sign_char = peek();
      const int sign = sign_char == '+' ? 1 : -1;
      ++pos_;
      int magnitude = 1;
      if (is_digit(peek())) {
        magnitude = 0;
        while (is_digit(peek())) {
          magnitude = magnitude * 10 + (peek() - '0');
          ++pos_;
        }
      } else {
        while (peek() == sign_char) {
          ++magnitude;
          ++pos_;
        }
      }
      atom.formal_charge = sign * magnitude;
    }
    if (peek() == ':') throw ParseError("atom classes are not supported", pos_);
    if (peek() != ']') throw ParseError("malformed bracket atom: expected ']'", pos_);
    ++pos_;
    if (!atom.bracket) {
      // Placeholder: ignore any decorations and treat as an organic-subset carbon.
      atom.explicit_h.reset();
      atom.formal_charge = 0;
    }
    attach(atom);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Molecule molecule_;
  std::optional<std::size_t> previous_;
  std::optional<char> pending_;
  std::size_t pending_offset_ = 0;
  std::vector<Branch> branches_;
  std::map<int, OpenRing> rings_;
};

std::vector<Molecule> split_components(const Molecule& molecule) {
  const std::size_t n = molecule.atoms.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Bond& b : molecule.bonds) {
    const auto ra = find(b.begin);
    const auto rb = find(b.end);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::vector<Molecule> components;
  std::vector<std::size_t> component_of(n), local_index(n);
  std::map<std::size_t, std::size_t> root_to_component;
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(i);
    auto [it, inserted] = root_to_component.emplace(root, components.size());
    if (inserted) components.emplace_back();
    component_of[i] = it->second;
    local_index[i] = components[it->second].atoms.size();
    components[it->second].atoms.push_back(molecule.atoms[i]);
  }
  for (const Bond& b : molecule.bonds) {
    components[component_of[b.begin]].bonds.push_back({local_index[b.begin], local_index[b.end], b.order_code});
  }
  return components;
}

}  // namespace

const ElementData& element_data(Element e) { return kElements[static_cast<std::size_t>(e)]; }

std::optional<Element> element_from_symbol(std::string_view symbol) {
  for (const auto& data : kElements) {
    if (data.symbol == symbol) return data.element;
  }
  return std::nullopt;
}

std::vector<Molecule> parse_smiles(std::string_view smiles) {
  return split_components(SmilesParser(smiles).parse());
}

std::vector<Atom> assign_implicit_hydrogens(std::vector<Atom> atoms, const std::vector<Bond>& bonds) {
  std::vector<double> order_sum(atoms.size(), 0.0);
  for (const Bond& b : bonds) {
    order_sum[b.begin] += b.order_code;
    order_sum[b.end] += b.order_code;
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    Atom& atom = atoms[i];
    if (atom.bracket) {
      atom.implicit_h = atom.explicit_h.value_or(0);
      continue;
    }
    const ElementData& data = element_data(atom.element);
    int valence = data.default_valence;
    // Group 15/16 cations gain a bond, everything else loses one per unit charge.
    const bool pnictogen_or_chalcogen = atom.element == Element::N || atom.element == Element::P ||
                                        atom.element == Element::O || atom.element == Element::S;
    valence += pnictogen_or_chalcogen ? atom.formal_charge : -std::abs(atom.formal_charge);
    const int used = static_cast<int>(std::ceil(order_sum[i] - 1e-9));
    const int hydrogens = valence - used;
    if (hydrogens < 0 && !atom.aromatic && used > max_standard_valence(atom.element)) {
      log_warning("over-bonded " + std::string(data.symbol) + " atom at index " + std::to_string(i) +
                  "; implicit hydrogen count clamped to 0");
    }
    atom.implicit_h = std::max(0, hydrogens);
  }
  return atoms;
}

std::array<double, kNodeFeatureDim> atom_features(const Atom& atom) {
  std::array<double, kNodeFeatureDim> features{};
  const auto slot = static_cast<std::size_t>(atom.element);
  if (slot < 7) features[slot] = 1.0;
  const ElementData& data = element_data(atom.element);
  if (data.atomic_number <= 0) throw FeaturizationError("no reference data for element");
  features[7] = data.atomic_number;
  features[8] = data.mass;
  features[9] = atom.formal_charge;
  features[10] = data.electronegativity;
  features[11] = data.vdw_radius;
  features[12] = atom.implicit_h;
  return features;
}

double molecular_weight(const std::vector<Atom>& atoms) {
  double total = 0.0;
  for (const Atom& atom : atoms) {
    total += element_data(atom.element).mass + atom.implicit_h * kHydrogenMass;
  }
  return total;
}

void MolecularGraph::finalize() {
  adjacency_.assign(num_nodes_, {});
  for (const Bond& b : edges_) {
    adjacency_[b.begin].emplace_back(b.end, b.order_code);
    adjacency_[b.end].emplace_back(b.begin, b.order_code);
  }
}

MolecularGraph MolecularGraph::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != num_nodes_) throw DimensionError("node permutation has the wrong length");
  std::vector<std::size_t> new_index(num_nodes_);
  for (std::size_t k = 0; k < order.size(); ++k) new_index[order[k]] = k;

  MolecularGraph out;
  out.num_nodes_ = num_nodes_;
  out.log_mol_weight_ = log_mol_weight_;
  out.source_smiles_ = source_smiles_;
  out.node_features_.resize(node_features_.size());
  out.atoms_.resize(atoms_.size());
  for (std::size_t k = 0; k < num_nodes_; ++k) {
    std::copy_n(node_features_.begin() + static_cast<std::ptrdiff_t>(order[k] * kNodeFeatureDim),
                kNodeFeatureDim, out.node_features_.begin() + static_cast<std::ptrdiff_t>(k * kNodeFeatureDim));
    out.atoms_[k] = atoms_[order[k]];
  }
  for (const Bond& b : edges_) out.edges_.push_back({new_index[b.begin], new_index[b.end], b.order_code});
  out.finalize();
  return out;
}

MolecularGraph build_graph(std::string_view smiles, std::optional<double> mol_weight_override) {
  MolecularGraph graph;
  graph.source_smiles_ = std::string(smiles);
  for (const Molecule& component : parse_smiles(smiles)) {
    const std::size_t offset = graph.num_nodes_;
    for (const Atom& atom : component.atoms) {
      const auto features = atom_features(atom);
      graph.node_features_.insert(graph.node_features_.end(), features.begin(), features.end());
      graph.atoms_.push_back(atom);
    }
    for (const Bond& b : component.bonds) {
      graph.edges_.push_back({b.begin + offset, b.end + offset, b.order_code});
    }
    graph.num_nodes_ += component.atoms.size();
  }
  double weight = molecular_weight(graph.atoms_);
  if (mol_weight_override) {
    if (!(*mol_weight_override > 0.0) || !std::isfinite(*mol_weight_override)) {
      throw DataError("molecular weight override must be a positive finite number");
    }
    weight = *mol_weight_override;
  }
  graph.log_mol_weight_ = std::log10(weight);
  graph.finalize();
  return graph;
}

std::string graph_to_json(const MolecularGraph& graph) {
  nlohmann::json doc;
  doc["smiles"] = graph.source_smiles();
  doc["num_nodes"] = graph.num_nodes();
  doc["num_edges"] = graph.num_edges();
  doc["log_mol_weight"] = graph.log_mol_weight();
  auto nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t d = 0; d < kNodeFeatureDim; ++d) row.push_back(graph.feature(i, d));
    nodes.push_back(std::move(row));
  }
  doc["node_features"] = std::move(nodes);
  auto edges = nlohmann::json::array();
  for (const Bond& b : graph.edges()) edges.push_back({{"source", b.begin}, {"target", b.end}, {"bond", b.order_code}});
  doc["edges"] = std::move(edges);
  return doc.dump(2);
}

}  // namespace molsets::chem
