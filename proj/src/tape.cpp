#include "actmod/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actmod/errors.hpp"

namespace actmod {

Parameter::Parameter(std::string name_, Matrix init, ParamGroup group_)
    : name(std::move(name_)),
      group(group_),
      value(std::move(init)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::constant(Matrix value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::parameter(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end())
    return NodeId{it->second};
  Node n;
  n.op = Op::parameter;
  n.value = p.value;
  n.param = &p;
  const NodeId id = push(std::move(n));
  param_nodes_.emplace(&p, id.index);
  return id;
}

NodeId Tape::matmul(NodeId a, NodeId b, bool transpose_a, bool transpose_b) {
  Node n;
  n.op = Op::matmul;
  n.value = actmod::matmul(value(a), value(b), transpose_a, transpose_b);
  n.inputs = {a.index, b.index};
  n.transpose_a = transpose_a;
  n.transpose_b = transpose_b;
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  Node n;
  n.op = Op::add;
  n.value = value(a) + value(b);
  n.inputs = {a.index, b.index};
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  Node n;
  n.op = Op::sub;
  n.value = value(a) - value(b);
  n.inputs = {a.index, b.index};
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  Node n;
  n.op = Op::scale;
  n.value = value(a) * factor;
  n.factor = factor;
  n.inputs = {a.index};
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  Node n;
  n.op = Op::relu;
  n.value = value(a);
  for (double& x : n.value.values()) x = x > 0.0 ? x : 0.0;
  n.inputs = {a.index};
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
  Node n;
  n.op = Op::tanh;
  n.value = value(a);
  for (double& x : n.value.values()) x = std::tanh(x);
  n.inputs = {a.index};
  return push(std::move(n));
}

NodeId Tape::row(NodeId table, std::size_t r) {
  const Matrix& t = value(table);
  if (r >= t.rows()) {
    throw LookupError("row " + std::to_string(r) + " out of range for " +
                      t.shape_string());
  }
  Node n;
  n.op = Op::row;
  n.value = Matrix::column(t.row(r));
  n.index = r;
  n.inputs = {table.index};
  return push(std::move(n));
}

NodeId Tape::flatten(NodeId a) {
  Node n;
  n.op = Op::flatten;
  n.value = Matrix::column(value(a).values());
  n.inputs = {a.index};
  return push(std::move(n));
}

NodeId Tape::concat(std::span<const NodeId> parts) {
  std::size_t total = 0;
  for (NodeId p : parts) {
    if (value(p).cols() != 1)
      throw DimensionError("concat: expected column vectors, got " +
                           value(p).shape_string());
    total += value(p).rows();
  }
  Node n;
  n.op = Op::concat;
  n.value = Matrix(total, 1);
  std::size_t off = 0;
  for (NodeId p : parts) {
    const auto v = value(p).values();
    std::copy(v.begin(), v.end(), n.value.data() + off);
    off += v.size();
    n.inputs.push_back(p.index);
  }
  return push(std::move(n));
}

NodeId Tape::masked_softmax(NodeId logits, const std::vector<bool>& padded,
                            double scale) {
  const Matrix& x = value(logits);
  if (x.cols() != 1 || x.rows() != padded.size())
    throw DimensionError("masked_softmax: logits " + x.shape_string() +
                         " with mask of " + std::to_string(padded.size()));
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw DomainError("masked_softmax: scale must be positive and finite");
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (padded[i]) continue;
    if (!std::isfinite(x(i, 0)))
      throw DomainError("masked_softmax: non-finite logit");
    mx = std::max(mx, x(i, 0));
  }
  if (!std::isfinite(mx))
    throw DomainError("attention over a window whose rows are all padded");
  Node n;
  n.op = Op::softmax;
  n.value = Matrix(x.rows(), 1);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (padded[i]) continue;
    n.value(i, 0) = std::exp((x(i, 0) - mx) / scale);
    total += n.value(i, 0);
  }
  n.value *= 1.0 / total;
  n.factor = scale;
  n.padded = padded;
  n.inputs = {logits.index};
  return push(std::move(n));
}

NodeId Tape::distance(NodeId a, NodeId b) {
  Node n;
  n.op = Op::distance;
  n.value = Matrix(1, 1);
  if (!value(a).same_shape(value(b)))
    throw DimensionError("distance: " + value(a).shape_string() + " vs " +
                         value(b).shape_string());
  n.value(0, 0) = euclidean_distance(value(a).values(), value(b).values());
  n.inputs = {a.index, b.index};
  return push(std::move(n));
}

NodeId Tape::hinge(NodeId a) {
  Node n;
  n.op = Op::hinge;
  n.value = value(a);
  for (double& x : n.value.values()) x = actmod::hinge(x);
  n.inputs = {a.index};
  return push(std::move(n));
}

NodeId Tape::sum(std::span<const NodeId> scalars) {
  Node n;
  n.op = Op::sum;
  n.value = Matrix(1, 1);
  for (NodeId s : scalars) {
    if (value(s).size() != 1)
      throw ContractError("sum: expected scalars, got " +
                          value(s).shape_string());
    n.value(0, 0) += value(s)(0, 0);
    n.inputs.push_back(s.index);
  }
  return push(std::move(n));
}

NodeId Tape::mean(std::span<const NodeId> scalars) {
  if (scalars.empty()) throw ContractError("mean of no scalars");
  return scale(sum(scalars), 1.0 / static_cast<double>(scalars.size()));
}

double Tape::scalar(NodeId n) const {
  const Matrix& v = value(n);
  if (v.size() != 1)
    throw ContractError("expected a scalar node, got " + v.shape_string());
  return v(0, 0);
}

Matrix& Tape::grad_of(std::uint32_t i) {
  Node& n = nodes_[i];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols())
    n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

const Matrix& Tape::gradient(NodeId n) const {
  if (!backward_done_) throw StateError("gradient requested before backward");
  return nodes_[n.index].grad;
}

void Tape::reset() {
  for (Node& n : nodes_) n.grad = Matrix();
  backward_done_ = false;
}

void Tape::backward(NodeId output) {
  if (backward_done_)
    throw StateError("backward called twice without reset");
  if (value(output).size() != 1)
    throw ContractError("backward needs a scalar output, got " +
                        value(output).shape_string());
  grad_of(output.index)(0, 0) = 1.0;
  for (std::uint32_t i = output.index + 1; i-- > 0;) {
    if (nodes_[i].grad.size() == 0) continue;
    propagate(i);
  }
  backward_done_ = true;
}

void Tape::propagate(std::uint32_t i) {
  // Copy out what we need: grad_of() on inputs may not reallocate nodes_, but
  // keep references scoped anyway.
  Node& n = nodes_[i];
  const Matrix& g = n.grad;
  switch (n.op) {
    case Op::constant:
      break;
    case Op::parameter:
      n.param->grad += g;
      break;
    case Op::matmul: {
      const std::uint32_t ia = n.inputs[0], ib = n.inputs[1];
      const Matrix& a = nodes_[ia].value;
      const Matrix& b = nodes_[ib].value;
      // C = op(A) op(B); dA and dB follow from the four transpose cases.
      if (nodes_[ia].op != Op::constant) {
        Matrix& ga = grad_of(ia);
        if (!n.transpose_a)
          matmul_accumulate(g, b, ga, false, !n.transpose_b);
        else
          matmul_accumulate(b, g, ga, n.transpose_b, true);
      }
      if (nodes_[ib].op != Op::constant) {
        Matrix& gb = grad_of(ib);
        if (!n.transpose_b)
          matmul_accumulate(a, g, gb, !n.transpose_a, false);
        else
          matmul_accumulate(g, a, gb, true, n.transpose_a);
      }
      break;
    }
    case Op::add:
      grad_of(n.inputs[0]) += g;
      grad_of(n.inputs[1]) += g;
      break;
    case Op::sub:
      grad_of(n.inputs[0]) += g;
      grad_of(n.inputs[1]) -= g;
      break;
    case Op::scale: {
      Matrix& ga = grad_of(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k)
        ga.data()[k] += n.factor * g.data()[k];
      break;
    }
    case Op::relu: {
      const Matrix& y = n.value;
      Matrix& ga = grad_of(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k)
        if (y.data()[k] > 0.0) ga.data()[k] += g.data()[k];
      break;
    }
    case Op::tanh: {
      const Matrix& y = n.value;
      Matrix& ga = grad_of(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k)
        ga.data()[k] += g.data()[k] * (1.0 - y.data()[k] * y.data()[k]);
      break;
    }
    case Op::row: {
      Matrix& ga = grad_of(n.inputs[0]);
      auto dst = ga.row(n.index);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g.data()[k];
      break;
    }
    case Op::flatten: {
      Matrix& ga = grad_of(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data()[k] += g.data()[k];
      break;
    }
    case Op::concat: {
      std::size_t off = 0;
      for (std::uint32_t in : n.inputs) {
        Matrix& ga = grad_of(in);
        for (std::size_t k = 0; k < ga.size(); ++k)
          ga.data()[k] += g.data()[off + k];
        off += ga.size();
      }
      break;
    }
    case Op::softmax: {
      const Matrix& w = n.value;
      double dot = 0.0;
      for (std::size_t k = 0; k < w.rows(); ++k) dot += w(k, 0) * g(k, 0);
      Matrix& ga = grad_of(n.inputs[0]);
      for (std::size_t k = 0; k < w.rows(); ++k) {
        if (n.padded[k]) continue;
        ga(k, 0) += w(k, 0) * (g(k, 0) - dot) / n.factor;
      }
      break;
    }
    case Op::distance: {
      const double d = n.value(0, 0);
      if (d == 0.0) break;  // subgradient 0 at coincident points
      const Matrix& a = nodes_[n.inputs[0]].value;
      const Matrix& b = nodes_[n.inputs[1]].value;
      const double s = g(0, 0) / d;
      Matrix& ga = grad_of(n.inputs[0]);
      for (std::size_t k = 0; k < a.size(); ++k)
        ga.data()[k] += s * (a.data()[k] - b.data()[k]);
      Matrix& gb = grad_of(n.inputs[1]);
      for (std::size_t k = 0; k < a.size(); ++k)
        gb.data()[k] -= s * (a.data()[k] - b.data()[k]);
      break;
    }
    case Op::hinge: {
      const Matrix& x = nodes_[n.inputs[0]].value;
      Matrix& ga = grad_of(n.inputs[0]);
      for (std::size_t k = 0; k < g.size(); ++k)
        if (x.data()[k] > 0.0) ga.data()[k] += g.data()[k];
      break;
    }
    case Op::sum:
      for (std::uint32_t in : n.inputs) grad_of(in)(0, 0) += g(0, 0);
      break;
  }
}

}  // namespace actmod
