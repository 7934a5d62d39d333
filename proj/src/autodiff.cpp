// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#include "molsets/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "molsets/error.hpp"

namespace molsets::ad {
namespace {

Tape& common_tape(Var a, Var b) {
  if (!a.valid() || !b.valid()) throw ContractError("operation on an unbound Var");
  if (a.tape() != b.tape()) throw ContractError("operands recorded on different tapes");
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.tape();
}

const Tensor& val(Tape& t, std::size_t id) { return t.value(Var(&t, id)); }

bool needs(Tape& t, std::size_t id) { return t.requires_grad(Var(&t, id)); }

// Shape of a binary elementwise result; a one-element operand broadcasts.
std::vector<std::size_t> broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b)) return a.shape();
  if (b.size() == 1) return a.shape();
  if (a.size() == 1) return b.shape();
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + " expects a matrix, got shape " + t.shape_string());
}

template <typename Forward, typename DA, typename DB>
Var elementwise_binary(Var a, Var b, const char* name, Forward forward, DA da, DB db) {
  Tape& tape = common_tape(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = Tensor::zeros(broadcast_shape(x, y, name));
  const bool bx = x.size() == 1 && out.size() != 1;
  const bool by = y.size() == 1 && out.size() != 1;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(x[bx ? 0 : i], y[by ? 0 : i]);
  const std::size_t ia = a.id(), ib = b.id();
  const bool grad = needs(tape, ia) || needs(tape, ib);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ia, ib, bx, by, da, db](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& xv = val(t, ia);
      const Tensor& yv = val(t, ib);
      if (needs(t, ia)) {
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[bx ? 0 : i] += g[i] * da(xv[bx ? 0 : i], yv[by ? 0 : i]);
      }
      if (needs(t, ib)) {
        Tensor& gb = t.grad_buffer(ib);
        for (std::size_t i = 0; i < g.size(); ++i) gb[by ? 0 : i] += g[i] * db(xv[bx ? 0 : i], yv[by ? 0 : i]);
      }
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

template <typename Forward, typename Derivative>
Var elementwise_unary(Var a, Forward forward, Derivative derivative) {
  Tape& tape = tape_of(a);
  Tensor out = a.value();
  for (double& v : out.values()) v = forward(v);
  const std::size_t ia = a.id();
  const bool grad = needs(tape, ia);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ia, derivative](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& x = val(t, ia);
      const Tensor& y = val(t, self);
      Tensor& gx = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * derivative(x[i], y[i]);
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("value() of an unbound Var");
  return tape_->value(*this);
}

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) { return record(std::move(value), true, nullptr); }

Var Tape::record(Tensor value, bool requires_grad, Backprop backprop) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(backprop)});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() != node.value.size() || node.grad.shape() != node.value.shape()) {
    node.grad = Tensor::zeros(node.value.shape());
  }
  return node.grad;
}

void Tape::backward(Var output) {
  if (output.tape() != this) throw ContractError("backward on a Var from another tape");
  if (nodes_[output.id()].value.size() != 1) {
    throw ContractError("backward needs a scalar output, got shape " + nodes_[output.id()].value.shape_string());
  }
  for (Node& node : nodes_) node.grad = Tensor{};
  grad_buffer(output.id())[0] = 1.0;
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backprop || node.grad.size() != node.value.size()) continue;
    node.backprop(*this, id);
  }
}

Tensor Tape::gradient(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.size() == node.value.size() && node.grad.shape() == node.value.shape()) return node.grad;
  return Tensor::zeros(node.value.shape());
}

Var matmul(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2(x, "matmul");
  require_rank2(y, "matmul");
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  if (y.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ for " + x.shape_string() + " and " + y.shape_string());
  }
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x.at(i, p);
      if (xv == 0.0) continue;
      const double* yrow = y.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  const bool grad = needs(tape, ia) || needs(tape, ib);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ia, ib, m, k, n](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& xv = val(t, ia);
      const Tensor& yv = val(t, ib);
      if (needs(t, ia)) {
        Tensor& ga = t.grad_buffer(ia);  // g * y^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g.at(i, j) * yv.at(p, j);
            ga.at(i, p) += acc;
          }
      }
      if (needs(t, ib)) {
        Tensor& gb = t.grad_buffer(ib);  // x^T * g
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double xip = xv.at(i, p);
            if (xip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) gb.at(p, j) += xip * g.at(i, j);
          }
      }
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var add(Var a, Var b) {
  return elementwise_binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return elementwise_binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return elementwise_binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var scale(Var x, double factor) {
  return elementwise_unary(
      x, [factor](double v) { return factor * v; }, [factor](double, double) { return factor; });
}

Var relu(Var x) {
  return elementwise_unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var x, double slope) {
  return elementwise_unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var exp(Var x) {
  return elementwise_unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().values()) {
    if (!(v > 0.0)) throw NumericError("log of a non-positive value");
  }
  return elementwise_unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var softmax(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& in = x.value();
  if (in.size() == 0) throw ContractError("softmax of an empty tensor");
  Tensor out = in;
  const double peak = *std::max_element(in.values().begin(), in.values().end());
  double total = 0.0;
  for (double& v : out.values()) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : out.values()) v /= total;
  const std::size_t ix = x.id();
  const bool grad = needs(tape, ix);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& y = val(t, self);
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - dot);
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var reduce(Var x, Reduction kind, std::size_t axis) {
  Tape& tape = tape_of(x);
  const Tensor& in = x.value();
  if (in.rank() == 0 || in.rank() > 2 || axis >= in.rank()) {
    throw DimensionError("reduce: axis " + std::to_string(axis) + " invalid for shape " + in.shape_string());
  }
  const std::size_t rows = in.shape()[0];
  const std::size_t cols = in.rank() == 2 ? in.shape()[1] : 1;
  const std::size_t extent = axis == 0 ? rows : cols;
  if (kind == Reduction::Mean && extent == 0) throw ContractError("mean over an empty axis");
  const double factor = kind == Reduction::Mean ? 1.0 / static_cast<double>(extent) : 1.0;

  std::vector<std::size_t> shape;
  if (in.rank() == 1) {
    shape = {1};
  } else {
    shape = axis == 0 ? std::vector<std::size_t>{1, cols} : std::vector<std::size_t>{rows, 1};
  }
  Tensor out = Tensor::zeros(shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[axis == 0 ? c : r] += in[r * cols + c] * factor;

  const std::size_t ix = x.id();
  const bool grad = needs(tape, ix);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix, rows, cols, axis, factor](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += g[axis == 0 ? c : r] * factor;
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var sum_all(Var x) {
  Tape& tape = tape_of(x);
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const std::size_t ix = x.id();
  const bool grad = needs(tape, ix);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix](Tape& t, std::size_t self) {
      const double g = t.grad_buffer(self)[0];
      for (double& v : t.grad_buffer(ix).values()) v += g;
    };
  }
  return tape.record(Tensor::scalar(total), grad, std::move(backprop));
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  Tape& tape = tape_of(parts[0]);
  const std::size_t rank = parts[0].value().rank();
  if (rank == 0 || rank > 2 || axis >= rank) throw DimensionError("concat: invalid axis for the operand rank");

  std::vector<std::size_t> ids;
  bool grad = false;
  for (Var p : parts) {
    if (p.tape() != &tape) throw ContractError("concat operands recorded on different tapes");
    if (p.value().rank() != rank) throw DimensionError("concat: operands differ in rank");
    ids.push_back(p.id());
    grad = grad || needs(tape, p.id());
  }

  // Treat everything as (outer x inner) blocks: axis 0 stacks whole blocks,
  // axis 1 of a matrix interleaves rows.
  const std::size_t outer = (rank == 2 && axis == 1) ? parts[0].value().shape()[0] : 1;
  std::vector<std::size_t> widths;
  std::size_t total_width = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    if (rank == 2) {
      const std::size_t other = axis == 0 ? v.shape()[1] : v.shape()[0];
      const std::size_t expected = axis == 0 ? parts[0].value().shape()[1] : parts[0].value().shape()[0];
      if (other != expected) {
        throw DimensionError("concat: shapes " + parts[0].value().shape_string() + " and " + v.shape_string() +
                             " disagree off the concat axis");
      }
    }
    const std::size_t width = (rank == 2 && axis == 1) ? v.shape()[1] : v.size();
    widths.push_back(width);
    total_width += width;
  }

  std::vector<std::size_t> shape;
  if (rank == 1) {
    shape = {total_width};
  } else if (axis == 0) {
    std::size_t rows = 0;
    for (Var p : parts) rows += p.value().shape()[0];
    shape = {rows, parts[0].value().shape()[1]};
  } else {
    shape = {outer, total_width};
  }
  Tensor out = Tensor::zeros(shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < outer; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total_width + offset);
    offset += widths[k];
  }

  Tape::Backprop backprop;
  if (grad) {
    backprop = [ids, widths, outer, total_width](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      std::size_t off = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (needs(t, ids[k]) && widths[k] > 0) {
          Tensor& gp = t.grad_buffer(ids[k]);
          for (std::size_t r = 0; r < outer; ++r)
            for (std::size_t c = 0; c < widths[k]; ++c) gp[r * widths[k] + c] += g[r * total_width + off + c];
        }
        off += widths[k];
      }
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var propagate(const SparseRows& a, Var x) {
  Tape& tape = tape_of(x);
  const Tensor& in = x.value();
  require_rank2(in, "propagate");
  if (in.rows() != a.cols) {
    throw DimensionError("propagate: operator has " + std::to_string(a.cols) + " columns, features have " +
                         std::to_string(in.rows()) + " rows");
  }
  const std::size_t d = in.cols();
  Tensor out = Tensor::zeros({a.rows, d});
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
      const double w = a.weights[k];
      const double* src = in.data() + a.columns[k] * d;
      double* dst = out.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
    }
  const std::size_t ix = x.id();
  const bool grad = needs(tape, ix);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix, a, d](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
          const double w = a.weights[k];
          double* dst = gx.data() + a.columns[k] * d;
          const double* src = g.data() + r * d;
          for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
        }
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var gather_rows(Var x, std::vector<std::size_t> index) {
  Tape& tape = tape_of(x);
  const Tensor& in = x.value();
  require_rank2(in, "gather_rows");
  const std::size_t d = in.cols();
  Tensor out = Tensor::zeros({index.size(), d});
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= in.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(in.data() + index[k] * d, d, out.data() + k * d);
  }
  const std::size_t ix = x.id();
  const bool grad = needs(tape, ix);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix, index = std::move(index), d](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t k = 0; k < index.size(); ++k)
        for (std::size_t c = 0; c < d; ++c) gx[index[k] * d + c] += g[k * d + c];
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var scatter_add_rows(Var x, std::vector<std::size_t> index, std::size_t num_rows) {
  Tape& tape = tape_of(x);
  const Tensor& in = x.value();
  require_rank2(in, "scatter_add_rows");
  if (index.size() != in.rows()) throw DimensionError("scatter_add_rows: one index per input row required");
  const std::size_t d = in.cols();
  Tensor out = Tensor::zeros({num_rows, d});
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= num_rows) throw DimensionError("scatter_add_rows: index out of range");
    for (std::size_t c = 0; c < d; ++c) out[index[k] * d + c] += in[k * d + c];
  }
  const std::size_t ix = x.id();
  const bool grad = needs(tape, ix);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix, index = std::move(index), d](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t k = 0; k < index.size(); ++k)
        for (std::size_t c = 0; c < d; ++c) gx[k * d + c] += g[index[k] * d + c];
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var segment_softmax(Var x, std::vector<std::size_t> segment, std::size_t num_segments) {
  Tape& tape = tape_of(x);
  const Tensor& in = x.value();
  if (segment.size() != in.size()) throw DimensionError("segment_softmax: one segment id per element required");
  std::vector<double> peak(num_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < segment.size(); ++k) {
    if (segment[k] >= num_segments) throw DimensionError("segment_softmax: segment id out of range");
    peak[segment[k]] = std::max(peak[segment[k]], in[k]);
  }
  Tensor out = in;
  std::vector<double> total(num_segments, 0.0);
  for (std::size_t k = 0; k < segment.size(); ++k) {
    out[k] = std::exp(in[k] - peak[segment[k]]);
    total[segment[k]] += out[k];
  }
  for (std::size_t k = 0; k < segment.size(); ++k) out[k] /= total[segment[k]];

  const std::size_t ix = x.id();
  const bool grad = needs(tape, ix);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix, segment = std::move(segment), num_segments](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& y = val(t, self);
      std::vector<double> dot(num_segments, 0.0);
      for (std::size_t k = 0; k < segment.size(); ++k) dot[segment[k]] += g[k] * y[k];
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t k = 0; k < segment.size(); ++k) gx[k] += y[k] * (g[k] - dot[segment[k]]);
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var scale_rows(Var x, Var factors) {
  Tape& tape = common_tape(x, factors);
  const Tensor& in = x.value();
  const Tensor& f = factors.value();
  require_rank2(in, "scale_rows");
  if (f.size() != in.rows()) {
    throw DimensionError("scale_rows: " + f.shape_string() + " factors for " + in.shape_string() + " rows");
  }
  const std::size_t d = in.cols();
  Tensor out = in;
  for (std::size_t r = 0; r < in.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] *= f[r];
  const std::size_t ix = x.id(), iff = factors.id();
  const bool grad = needs(tape, ix) || needs(tape, iff);
  Tape::Backprop backprop;
  if (grad) {
    backprop = [ix, iff, d](Tape& t, std::size_t self) {
      const Tensor& g = t.grad_buffer(self);
      const Tensor& xv = val(t, ix);
      const Tensor& fv = val(t, iff);
      const std::size_t rows = fv.size();
      if (needs(t, ix)) {
        Tensor& gx = t.grad_buffer(ix);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += g[r * d + c] * fv[r];
      }
      if (needs(t, iff)) {
        Tensor& gf = t.grad_buffer(iff);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < d; ++c) gf[r] += g[r * d + c] * xv[r * d + c];
      }
    };
  }
  return tape.record(std::move(out), grad, std::move(backprop));
}

Var ParameterBinding::operator()(const std::string& name) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  auto found = params_->find(name);
  if (found == params_->end()) throw ContractError("unknown parameter '" + name + "'");
  Var v = track_ ? tape_->variable(found->second) : tape_->constant(found->second);
  bound_.emplace(name, v);
  return v;
}

GradientMap ParameterBinding::gradients() const {
  GradientMap grads;
  for (const auto& [name, tensor] : *params_) {
    auto it = bound_.find(name);
    grads.emplace(name, (track_ && it != bound_.end()) ? tape_->gradient(it->second) : Tensor::zeros(tensor.shape()));
  }
  return grads;
}

GradientMap finite_diff_gradient(const std::function<double(const ParameterSet&)>& f, const ParameterSet& params,
                                 double h) {
  if (!(h > 0.0)) throw ContractError("finite-difference step must be positive");
  ParameterSet probe = params;
  GradientMap grads;
  for (auto& [name, tensor] : probe) {
    Tensor g = Tensor::zeros(tensor.shape());
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double original = tensor[i];
      tensor[i] = original + h;
      const double up = f(probe);
      tensor[i] = original - h;
      const double down = f(probe);
      tensor[i] = original;
      g[i] = (up - down) / (2.0 * h);
    }
    grads.emplace(name, std::move(g));
  }
  return grads;
}

}  // namespace molsets::ad
