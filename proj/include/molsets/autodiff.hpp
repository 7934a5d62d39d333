// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "molsets/tensor.hpp"

namespace molsets::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const std::vector<std::size_t>& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations of one forward pass and replays them in reverse.
///
/// A tape is single-threaded. Nodes are appended in evaluation order, so the
/// node list is already topologically sorted and backward is a reverse sweep.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is accumulated by backward().
  Var variable(Tensor value);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse accumulation from a one-element output. Gradients from a previous
  /// call are discarded first, so replays give identical results.
  void backward(Var output);

  /// Gradient of `v` after backward(); zeros if `v` did not influence the output.
  Tensor gradient(Var v) const;

  // Op authoring interface. A backprop callback receives the tape and the id
  // of the node it was recorded for; it runs only if that node got a gradient.
  using Backprop = std::function<void(Tape&, std::size_t)>;
  Var record(Tensor value, bool requires_grad, Backprop backprop);
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
};

// ---- Dense ops ------------------------------------------------------------

Var matmul(Var a, Var b);

/// Elementwise binary ops; one operand may be a one-element tensor (scalar broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var relu(Var x);
Var leaky_relu(Var x, double slope);
Var exp(Var x);
Var log(Var x);

/// Softmax over all elements of x (a vector or a single row/column).
Var softmax(Var x);

enum class Reduction { Sum, Mean };
/// Reduction along `axis`. Rank-2 inputs keep the reduced axis with length 1.
Var reduce(Var x, Reduction kind, std::size_t axis);
inline Var sum(Var x, std::size_t axis) { return reduce(x, Reduction::Sum, axis); }
inline Var mean(Var x, std::size_t axis) { return reduce(x, Reduction::Mean, axis); }
/// Sum of every element, shape [1].
Var sum_all(Var x);

Var concat(std::span<const Var> parts, std::size_t axis);
inline Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

// ---- Graph ops ------------------------------------------------------------

/// Constant sparse matrix in compressed-row form.
struct SparseRows {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> columns;
  std::vector<double> weights;

  void push(std::size_t column, double weight) {
    columns.push_back(column);
    weights.push_back(weight);
  }
  void end_row() {
    offsets.push_back(columns.size());
    ++rows;
  }
};

/// A * x for a constant sparse A (rows x n) and x (n x d).
Var propagate(const SparseRows& a, Var x);
/// out[k] = x[index[k]]; x is n x d.
Var gather_rows(Var x, std::vector<std::size_t> index);
/// out[index[k]] += x[k]; result has `num_rows` rows.
Var scatter_add_rows(Var x, std::vector<std::size_t> index, std::size_t num_rows);
/// Softmax of a column vector within groups sharing a segment id.
Var segment_softmax(Var x, std::vector<std::size_t> segment, std::size_t num_segments);
/// Row k of x multiplied by factors[k]; factors is m x 1.
Var scale_rows(Var x, Var factors);

// ---- Parameters -----------------------------------------------------------

/// Binds named parameters onto a tape on first use.
class ParameterBinding {
 public:
  ParameterBinding(Tape& tape, const ParameterSet& params, bool track_gradients = true)
      : tape_(&tape), params_(&params), track_(track_gradients) {}

  Var operator()(const std::string& name);
  Tape& tape() const { return *tape_; }
  const ParameterSet& parameters() const { return *params_; }

  /// One entry per parameter in the set; unbound parameters get zero tensors.
  GradientMap gradients() const;

 private:
  Tape* tape_;
  const ParameterSet* params_;
  bool track_;
  std::map<std::string, Var> bound_;
};

/// Central differences (f(p + h) - f(p - h)) / 2h for every coordinate.
GradientMap finite_diff_gradient(const std::function<double(const ParameterSet&)>& f,
                                 const ParameterSet& params, double h);

}  // namespace molsets::ad
