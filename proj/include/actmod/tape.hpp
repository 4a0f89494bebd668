#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "actmod/matrix.hpp"

namespace actmod {

enum class ParamGroup : std::uint8_t { standard = 0, modifier = 1 };

// Trainable matrix together with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix init,
            ParamGroup group = ParamGroup::standard);

  std::string name;
  ParamGroup group = ParamGroup::standard;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  std::uint64_t step = 0;

  void zero_grad() { grad.fill(0.0); }
};

struct NodeId {
  std::uint32_t index = 0;
  bool operator==(const NodeId&) const = default;
};

// Reverse-mode differentiation over matrix-valued operations. A tape is
// built by one forward pass; backward() pushes d(output)/d(node) back to every
// node and accumulates into the grad of each participating Parameter. Column
// vectors are n x 1 matrices; scalars are 1 x 1.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  NodeId constant(Matrix value);
  // A Parameter enters the tape once; repeated calls return the same node.
  NodeId parameter(Parameter& p);

  NodeId matmul(NodeId a, NodeId b, bool transpose_a = false,
                bool transpose_b = false);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  // Row r of a matrix node, as a column vector.
  NodeId row(NodeId table, std::size_t r);
  // Row-major flattening into a column vector.
  NodeId flatten(NodeId a);
  // Stacks column vectors on top of each other.
  NodeId concat(std::span<const NodeId> parts);
  // softmax(logits / scale) over a column vector; entries with padded[i] set
  // are excluded and get weight 0. All entries padded is a DomainError.
  NodeId masked_softmax(NodeId logits, const std::vector<bool>& padded,
                        double scale);
  // Unsquared Euclidean distance between two equally shaped nodes (1x1).
  NodeId distance(NodeId a, NodeId b);
  NodeId hinge(NodeId a);
  NodeId sum(std::span<const NodeId> scalars);
  NodeId mean(std::span<const NodeId> scalars);

  const Matrix& value(NodeId n) const { return nodes_[n.index].value; }
  double scalar(NodeId n) const;
  std::size_t size() const { return nodes_.size(); }

  void backward(NodeId output);
  // Clears node gradients so backward() may run again.
  void reset();

  // Gradient of the output with respect to a node (after backward).
  const Matrix& gradient(NodeId n) const;

 private:
  enum class Op : std::uint8_t {
    constant,
    parameter,
    matmul,
    add,
    sub,
    scale,
    relu,
    tanh,
    row,
    flatten,
    concat,
    softmax,
    distance,
    hinge,
    sum,
  };

  struct Node {
    Op op = Op::constant;
    Matrix value;
    Matrix grad;
    std::vector<std::uint32_t> inputs;
    Parameter* param = nullptr;
    double factor = 1.0;
    std::size_t index = 0;
    bool transpose_a = false;
    bool transpose_b = false;
    std::vector<bool> padded;
  };

  NodeId push(Node n);
  Matrix& grad_of(std::uint32_t i);
  void propagate(std::uint32_t i);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  bool backward_done_ = false;
};

}  // namespace actmod
