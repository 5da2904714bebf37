// SPDX-License-Identifier: Apache-2.0
//
// Eager reverse-mode automatic differentiation. Every operation computes its
// value immediately and appends a node to a Tape; Tape::backward walks the tape
// in reverse. Nodes are stored in creation order, which is a topological order.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dact/params.hpp"
#include "dact/tensor.hpp"

namespace dact {

enum class Op : std::uint8_t {
  Constant,
  Parameter,
  MatMul,
  Add,        // same shape, or b broadcast as a 1 x c row over a
  Sub,
  Mul,
  Scale,
  Transpose,
  ConcatCols,
  ConcatRows,
  SliceCols,
  Row,
  Pick,
  Sigmoid,
  Tanh,
  Exp,
  Softmax,     // row-wise
  LogSoftmax,  // row-wise
  MeanRows,
  Lookup,
  Dropout,
  Sum,
  CrfNll,
  ExpectedCost,
};

const char* op_name(Op op);

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
  bool valid() const { return tape != nullptr && id >= 0; }
};

class Tape {
 public:
  /// A tape built with grad disabled records values only; backward is rejected.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls for the same parameter return
  /// the same node; gradients flow into Param::grad.
  Var param(Param& p);
  /// Read-only binding; acts as a constant and never receives gradient.
  Var param(const Param& p);

  const Tensor& value(int id) const;
  /// Gradient of a non-parameter node after backward (empty if unreachable).
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(root)/d(root) = seed and propagates to every reachable parameter.
  /// Gradients accumulate into Param::grad, so several backward passes sum.
  void backward(Var root, double seed = 1.0);

  void clear();
  /// Drops every node created after the first `size` ones.
  void truncate(std::size_t size);

  // Internal: used by the op functions.
  struct Node {
    Op op = Op::Constant;
    bool requires_grad = false;
    int a = -1;
    int b = -1;
    int c = -1;
    double scalar = 0.0;
    std::vector<int> ints;     // parent list, indices, labels, offsets
    Tensor value;
    const Tensor* ref = nullptr;  // borrowed value for parameter leaves
    Param* param = nullptr;       // gradient sink for trainable leaves
    Tensor aux;                   // op-specific cache (masks, marginals, ...)
    Tensor grad;
  };
  Var push(Node node);
  const Node& node(int id) const { return nodes_[id]; }
  Node& node(int id) { return nodes_[id]; }

 private:
  Tensor& grad_sink(int id);
  void backprop_node(int id);

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;  // indexed by Param::index, -1 if unbound
};

// ---- primitive operations ---------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var transpose(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, int begin, int count);
Var row(Var a, int r);
/// Scalar a(r, c).
Var pick(Var a, int r, int c);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var softmax(Var a);
Var log_softmax(Var a);
Var mean_rows(Var a);
/// Embedding gather: returns one row of `table` per index, stacked.
Var lookup(Var table, std::span<const int> indices);
/// Inverted dropout with keep-probability 1-p and a mask derived from `seed`.
/// Identity when p == 0.
Var dropout(Var a, double p, std::uint64_t seed);
Var sum(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Linear-chain CRF negative log-likelihood of `gold` given unary scores
/// (L x Y), transitions (Y x Y, row = previous label) and start scores (1 x Y).
Var crf_nll(Var unary, Var transitions, Var start, std::span<const int> gold);

/// sum_i cost_i * exp(l_i) / sum_j exp(l_j) for a 1 x n row of log-probabilities.
Var expected_cost(Var logprobs, std::span<const double> costs);

}  // namespace dact
