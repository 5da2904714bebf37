// SPDX-License-Identifier: Apache-2.0
#include "dact/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dact/crf.hpp"

namespace dact {

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Parameter: return "parameter";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Transpose: return "transpose";
    case Op::ConcatCols: return "concat_cols";
    case Op::ConcatRows: return "concat_rows";
    case Op::SliceCols: return "slice_cols";
    case Op::Row: return "row";
    case Op::Pick: return "pick";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Softmax: return "softmax";
    case Op::LogSoftmax: return "log_softmax";
    case Op::MeanRows: return "mean_rows";
    case Op::Lookup: return "lookup";
    case Op::Dropout: return "dropout";
    case Op::Sum: return "sum";
    case Op::CrfNll: return "crf_nll";
    case Op::ExpectedCost: return "expected_cost";
  }
  return "?";
}

const Tensor& Var::value() const { return tape->value(id); }

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_[id];
  return n.ref ? *n.ref : n.value;
}

Var Tape::push(Node node) {
  if (!grad_enabled_) node.requires_grad = false;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(Param& p) {
  if (static_cast<int>(param_nodes_.size()) <= p.index) param_nodes_.resize(p.index + 1, -1);
  if (param_nodes_[p.index] >= 0) return Var{this, param_nodes_[p.index]};
  Node n;
  n.op = Op::Parameter;
  n.ref = &p.value;
  n.param = &p;
  n.requires_grad = true;
  Var v = push(std::move(n));
  param_nodes_[p.index] = v.id;
  return v;
}

Var Tape::param(const Param& p) {
  if (static_cast<int>(param_nodes_.size()) <= p.index) param_nodes_.resize(p.index + 1, -1);
  if (param_nodes_[p.index] >= 0) return Var{this, param_nodes_[p.index]};
  Node n;
  n.op = Op::Parameter;
  n.ref = &p.value;
  Var v = push(std::move(n));
  param_nodes_[p.index] = v.id;
  return v;
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

void Tape::truncate(std::size_t size) {
  if (size >= nodes_.size()) return;
  nodes_.resize(size);
  for (int& id : param_nodes_)
    if (id >= static_cast<int>(size)) id = -1;
}

Tensor& Tape::grad_sink(int id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->grad;
  if (n.grad.empty()) n.grad = Tensor(value(id).rows, value(id).cols);
  return n.grad;
}

void Tape::backward(Var root, double seed) {
  if (!grad_enabled_) throw Error("backward: tape was built with gradients disabled");
  if (root.tape != this) throw Error("backward: variable belongs to another tape");
  const Tensor& rv = value(root.id);
  if (rv.rows != 1 || rv.cols != 1) throw Error("backward: root must be a scalar, got " + rv.shape_str());
  for (Node& n : nodes_) n.grad = Tensor();
  if (!nodes_[root.id].requires_grad) return;
  grad_sink(root.id)(0, 0) += seed;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.param || n.grad.empty()) continue;
    backprop_node(id);
  }
}

namespace {

[[noreturn]] void shape_error(Op op, const Tensor& a, const Tensor& b) {
  throw Error(std::string(op_name(op)) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

bool needs(const Tape& t, int id) { return id >= 0 && t.node(id).requires_grad; }

Tape::Node make(Op op, Tape& t, std::initializer_list<int> parents) {
  Tape::Node n;
  n.op = op;
  auto it = parents.begin();
  if (it != parents.end()) n.a = *it++;
  if (it != parents.end()) n.b = *it++;
  if (it != parents.end()) n.c = *it++;
  for (int p : parents) n.requires_grad = n.requires_grad || needs(t, p);
  return n;
}

void gemm_acc(const double* A, const double* B, double* C, int m, int k, int n) {
  // C(m x n) += A(m x k) * B(k x n)
  for (int i = 0; i < m; ++i) {
    double* crow = C + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double a = A[static_cast<std::size_t>(i) * k + p];
      if (a == 0.0) continue;
      const double* brow = B + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  }
}

void row_softmax(const Tensor& x, Tensor& y) {
  y = Tensor(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    auto in = x.row_span(r);
    auto out = y.row_span(r);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (int c = 0; c < x.cols; ++c) s += (out[c] = std::exp(in[c] - m));
    for (int c = 0; c < x.cols; ++c) out[c] /= s;
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols != B.rows) shape_error(Op::MatMul, A, B);
  auto n = make(Op::MatMul, t, {a.id, b.id});
  n.value = Tensor(A.rows, B.cols);
  gemm_acc(A.data.data(), B.data.data(), n.value.data.data(), A.rows, A.cols, B.cols);
  return t.push(std::move(n));
}

Var add(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  auto n = make(Op::Add, t, {a.id, b.id});
  if (A.same_shape(B)) {
    n.value = A;
    for (std::size_t i = 0; i < A.size(); ++i) n.value[i] += B[i];
  } else if (B.rows == 1 && B.cols == A.cols) {
    n.value = A;
    for (int r = 0; r < A.rows; ++r)
      for (int c = 0; c < A.cols; ++c) n.value(r, c) += B(0, c);
  } else {
    shape_error(Op::Add, A, B);
  }
  return t.push(std::move(n));
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error(Op::Sub, A, B);
  auto n = make(Op::Sub, t, {a.id, b.id});
  n.value = A;
  for (std::size_t i = 0; i < A.size(); ++i) n.value[i] -= B[i];
  return t.push(std::move(n));
}

Var mul(Var a, Var b) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error(Op::Mul, A, B);
  auto n = make(Op::Mul, t, {a.id, b.id});
  n.value = A;
  for (std::size_t i = 0; i < A.size(); ++i) n.value[i] *= B[i];
  return t.push(std::move(n));
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  auto n = make(Op::Scale, t, {a.id});
  n.scalar = s;
  n.value = a.value();
  for (double& x : n.value.data) x *= s;
  return t.push(std::move(n));
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  auto n = make(Op::Transpose, t, {a.id});
  n.value = Tensor(A.cols, A.rows);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) n.value(c, r) = A(r, c);
  return t.push(std::move(n));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  Tape& t = *parts[0].tape;
  const int rows = parts[0].rows();
  int cols = 0;
  Tape::Node n;
  n.op = Op::ConcatCols;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error(Op::ConcatCols, parts[0].value(), p.value());
    cols += p.cols();
    n.ints.push_back(p.id);
    n.requires_grad = n.requires_grad || needs(t, p.id);
  }
  n.value = Tensor(rows, cols);
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    for (int r = 0; r < rows; ++r)
      std::copy(P.row_span(r).begin(), P.row_span(r).end(), n.value.row_span(r).begin() + off);
    off += P.cols;
  }
  return t.push(std::move(n));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_rows: no inputs");
  Tape& t = *parts[0].tape;
  const int cols = parts[0].cols();
  int rows = 0;
  Tape::Node n;
  n.op = Op::ConcatRows;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_error(Op::ConcatRows, parts[0].value(), p.value());
    rows += p.rows();
    n.ints.push_back(p.id);
    n.requires_grad = n.requires_grad || needs(t, p.id);
  }
  n.value = Tensor(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    std::copy(P.data.begin(), P.data.end(), n.value.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += P.size();
  }
  return t.push(std::move(n));
}

Var slice_cols(Var a, int begin, int count) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  if (begin < 0 || count < 0 || begin + count > A.cols) {
    throw Error("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                ") out of range for " + A.shape_str());
  }
  auto n = make(Op::SliceCols, t, {a.id});
  n.ints = {begin};
  n.value = Tensor(A.rows, count);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < count; ++c) n.value(r, c) = A(r, begin + c);
  return t.push(std::move(n));
}

Var row(Var a, int r) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  if (r < 0 || r >= A.rows) throw Error("row: index " + std::to_string(r) + " out of range for " + A.shape_str());
  auto n = make(Op::Row, t, {a.id});
  n.ints = {r};
  n.value = Tensor::row(A.row_span(r));
  return t.push(std::move(n));
}

Var pick(Var a, int r, int c) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  if (r < 0 || r >= A.rows || c < 0 || c >= A.cols) {
    throw Error("pick: (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range for " + A.shape_str());
  }
  auto n = make(Op::Pick, t, {a.id});
  n.ints = {r, c};
  n.value = Tensor::scalar(A(r, c));
  return t.push(std::move(n));
}

Var sigmoid(Var a) {
  Tape& t = *a.tape;
  auto n = make(Op::Sigmoid, t, {a.id});
  n.value = a.value();
  for (double& x : n.value.data) x = 1.0 / (1.0 + std::exp(-x));
  return t.push(std::move(n));
}

Var tanh(Var a) {
  Tape& t = *a.tape;
  auto n = make(Op::Tanh, t, {a.id});
  n.value = a.value();
  for (double& x : n.value.data) x = std::tanh(x);
  return t.push(std::move(n));
}

Var exp(Var a) {
  Tape& t = *a.tape;
  auto n = make(Op::Exp, t, {a.id});
  n.value = a.value();
  for (double& x : n.value.data) x = std::exp(x);
  return t.push(std::move(n));
}

Var softmax(Var a) {
  Tape& t = *a.tape;
  auto n = make(Op::Softmax, t, {a.id});
  row_softmax(a.value(), n.value);
  return t.push(std::move(n));
}

Var log_softmax(Var a) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  auto n = make(Op::LogSoftmax, t, {a.id});
  n.value = Tensor(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r) {
    auto in = A.row_span(r);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (double x : in) s += std::exp(x - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < A.cols; ++c) n.value(r, c) = in[c] - lse;
  }
  return t.push(std::move(n));
}

Var mean_rows(Var a) {
  Tape& t = *a.tape;
  const Tensor& A = a.value();
  if (A.rows == 0) throw Error("mean_rows: empty input");
  auto n = make(Op::MeanRows, t, {a.id});
  n.value = Tensor(1, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) n.value(0, c) += A(r, c);
  for (double& x : n.value.data) x /= A.rows;
  return t.push(std::move(n));
}

Var lookup(Var table, std::span<const int> indices) {
  Tape& t = *table.tape;
  const Tensor& T = table.value();
  if (indices.empty()) throw Error("lookup: no indices");
  auto n = make(Op::Lookup, t, {table.id});
  n.ints.assign(indices.begin(), indices.end());
  n.value = Tensor(static_cast<int>(indices.size()), T.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= T.rows) throw Error("lookup: index " + std::to_string(idx) + " out of range for " + T.shape_str());
    std::copy(T.row_span(idx).begin(), T.row_span(idx).end(), n.value.row_span(static_cast<int>(i)).begin());
  }
  return t.push(std::move(n));
}

Var dropout(Var a, double p, std::uint64_t seed) {
  if (p < 0.0 || p >= 1.0) throw Error("dropout: rate must be in [0, 1)");
  if (p == 0.0) return a;
  Tape& t = *a.tape;
  auto n = make(Op::Dropout, t, {a.id});
  const Tensor& A = a.value();
  n.aux = Tensor(A.rows, A.cols);
  n.value = A;
  const double keep_scale = 1.0 / (1.0 - p);
  std::uint64_t state = splitmix64(seed);
  for (std::size_t i = 0; i < A.size(); ++i) {
    state = splitmix64(state + i);
    const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
    n.aux[i] = u >= p ? keep_scale : 0.0;
    n.value[i] *= n.aux[i];
  }
  return t.push(std::move(n));
}

Var sum(Var a) {
  Tape& t = *a.tape;
  auto n = make(Op::Sum, t, {a.id});
  double s = 0.0;
  for (double x : a.value().data) s += x;
  n.value = Tensor::scalar(s);
  return t.push(std::move(n));
}

Var crf_nll(Var unary, Var transitions, Var start, std::span<const int> gold) {
  Tape& t = *unary.tape;
  const Tensor& U = unary.value();
  const Tensor& A = transitions.value();
  const Tensor& S = start.value();
  if (static_cast<int>(gold.size()) != U.rows) {
    throw Error("crf_nll: " + std::to_string(gold.size()) + " gold labels for " + std::to_string(U.rows) + " positions");
  }
  for (int y : gold)
    if (y < 0 || y >= U.cols) throw Error("crf_nll: gold label " + std::to_string(y) + " out of range");
  auto n = make(Op::CrfNll, t, {unary.id, transitions.id, start.id});
  n.ints.assign(gold.begin(), gold.end());
  crf::Marginals mg = crf::marginals(U, A, &S);
  n.value = Tensor::scalar(mg.log_z - crf::path_score(U, A, &S, gold));
  if (n.requires_grad) {
    n.aux = Tensor(U.rows + U.cols, U.cols);
    std::copy(mg.unary.data.begin(), mg.unary.data.end(), n.aux.data.begin());
    std::copy(mg.pair.data.begin(), mg.pair.data.end(), n.aux.data.begin() + static_cast<std::ptrdiff_t>(mg.unary.size()));
  }
  return t.push(std::move(n));
}

Var expected_cost(Var logprobs, std::span<const double> costs) {
  Tape& t = *logprobs.tape;
  const Tensor& L = logprobs.value();
  if (L.rows != 1 || L.cols == 0) throw Error("expected_cost: log-probabilities must be a non-empty 1 x n row");
  if (static_cast<int>(costs.size()) != L.cols) throw Error("expected_cost: cost count does not match candidates");
  auto n = make(Op::ExpectedCost, t, {logprobs.id});
  const double m = *std::max_element(L.data.begin(), L.data.end());
  n.aux = Tensor(2, L.cols);  // row 0: costs, row 1: renormalised probabilities
  double num = 0.0, den = 0.0;
  for (int i = 0; i < L.cols; ++i) {
    const double w = std::exp(L(0, i) - m);
    n.aux(0, i) = costs[i];
    n.aux(1, i) = w;
    num += costs[i] * w;
    den += w;
  }
  for (int i = 0; i < L.cols; ++i) n.aux(1, i) /= den;
  n.value = Tensor::scalar(num / den);
  return t.push(std::move(n));
}

void Tape::backprop_node(int id) {
  // Copy what we need: grad_sink may reallocate nothing, but keep references local.
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  auto want = [&](int pid) { return pid >= 0 && nodes_[pid].requires_grad; };

  switch (n.op) {
    case Op::Constant:
    case Op::Parameter:
      break;
    case Op::MatMul: {
      const Tensor& A = value(n.a);
      const Tensor& B = value(n.b);
      if (want(n.a)) {
        Tensor& ga = grad_sink(n.a);  // += g * B^T
        for (int i = 0; i < A.rows; ++i)
          for (int j = 0; j < B.cols; ++j) {
            const double gij = g(i, j);
            if (gij == 0.0) continue;
            for (int p = 0; p < A.cols; ++p) ga(i, p) += gij * B(p, j);
          }
      }
      if (want(n.b)) {
        Tensor& gb = grad_sink(n.b);  // += A^T * g
        for (int i = 0; i < A.rows; ++i)
          for (int p = 0; p < A.cols; ++p) {
            const double a = A(i, p);
            if (a == 0.0) continue;
            double* out = gb.data.data() + static_cast<std::size_t>(p) * B.cols;
            const double* gi = g.data.data() + static_cast<std::size_t>(i) * B.cols;
            for (int j = 0; j < B.cols; ++j) out[j] += a * gi[j];
          }
      }
      break;
    }
    case Op::Add: {
      if (want(n.a)) {
        Tensor& ga = grad_sink(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (want(n.b)) {
        Tensor& gb = grad_sink(n.b);
        if (gb.same_shape(g)) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        } else {
          for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c) gb(0, c) += g(r, c);
        }
      }
      break;
    }
    case Op::Sub: {
      if (want(n.a)) {
        Tensor& ga = grad_sink(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (want(n.b)) {
        Tensor& gb = grad_sink(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
      break;
    }
    case Op::Mul: {
      const Tensor& A = value(n.a);
      const Tensor& B = value(n.b);
      if (want(n.a)) {
        Tensor& ga = grad_sink(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
      }
      if (want(n.b)) {
        Tensor& gb = grad_sink(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
      }
      break;
    }
    case Op::Scale: {
      Tensor& ga = grad_sink(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.scalar;
      break;
    }
    case Op::Transpose: {
      Tensor& ga = grad_sink(n.a);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga(c, r) += g(r, c);
      break;
    }
    case Op::ConcatCols: {
      int off = 0;
      for (int pid : n.ints) {
        const int w = value(pid).cols;
        if (want(pid)) {
          Tensor& gp = grad_sink(pid);
          for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < w; ++c) gp(r, c) += g(r, off + c);
        }
        off += w;
      }
      break;
    }
    case Op::ConcatRows: {
      std::size_t off = 0;
      for (int pid : n.ints) {
        const std::size_t len = value(pid).size();
        if (want(pid)) {
          Tensor& gp = grad_sink(pid);
          for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
        }
        off += len;
      }
      break;
    }
    case Op::SliceCols: {
      Tensor& ga = grad_sink(n.a);
      const int begin = n.ints[0];
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga(r, begin + c) += g(r, c);
      break;
    }
    case Op::Row: {
      Tensor& ga = grad_sink(n.a);
      const int r = n.ints[0];
      for (int c = 0; c < g.cols; ++c) ga(r, c) += g(0, c);
      break;
    }
    case Op::Pick: {
      grad_sink(n.a)(n.ints[0], n.ints[1]) += g[0];
      break;
    }
    case Op::Sigmoid: {
      Tensor& ga = grad_sink(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case Op::Tanh: {
      Tensor& ga = grad_sink(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case Op::Exp: {
      Tensor& ga = grad_sink(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
      break;
    }
    case Op::Softmax: {
      Tensor& ga = grad_sink(n.a);
      for (int r = 0; r < g.rows; ++r) {
        double dot = 0.0;
        for (int c = 0; c < g.cols; ++c) dot += g(r, c) * n.value(r, c);
        for (int c = 0; c < g.cols; ++c) ga(r, c) += n.value(r, c) * (g(r, c) - dot);
      }
      break;
    }
    case Op::LogSoftmax: {
      Tensor& ga = grad_sink(n.a);
      for (int r = 0; r < g.rows; ++r) {
        double gs = 0.0;
        for (int c = 0; c < g.cols; ++c) gs += g(r, c);
        for (int c = 0; c < g.cols; ++c) ga(r, c) += g(r, c) - std::exp(n.value(r, c)) * gs;
      }
      break;
    }
    case Op::MeanRows: {
      Tensor& ga = grad_sink(n.a);
      const double inv = 1.0 / ga.rows;
      for (int r = 0; r < ga.rows; ++r)
        for (int c = 0; c < ga.cols; ++c) ga(r, c) += g(0, c) * inv;
      break;
    }
    case Op::Lookup: {
      Tensor& ga = grad_sink(n.a);
      for (std::size_t i = 0; i < n.ints.size(); ++i) {
        auto src = g.row_span(static_cast<int>(i));
        auto dst = ga.row_span(n.ints[i]);
        for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::Dropout: {
      Tensor& ga = grad_sink(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux[i];
      break;
    }
    case Op::Sum: {
      Tensor& ga = grad_sink(n.a);
      for (double& x : ga.data) x += g[0];
      break;
    }
    case Op::CrfNll: {
      const double s = g[0];
      const int L = static_cast<int>(n.ints.size());
      const int Y = n.aux.cols;
      if (want(n.a)) {
        Tensor& gu = grad_sink(n.a);
        for (int t = 0; t < L; ++t) {
          for (int c = 0; c < Y; ++c) gu(t, c) += s * n.aux(t, c);
          gu(t, n.ints[t]) -= s;
        }
      }
      if (want(n.b)) {
        Tensor& gt = grad_sink(n.b);
        for (int p = 0; p < Y; ++p)
          for (int c = 0; c < Y; ++c) gt(p, c) += s * n.aux(L + p, c);
        for (int t = 1; t < L; ++t) gt(n.ints[t - 1], n.ints[t]) -= s;
      }
      if (want(n.c)) {
        Tensor& gs = grad_sink(n.c);
        for (int c = 0; c < Y; ++c) gs(0, c) += s * n.aux(0, c);
        gs(0, n.ints[0]) -= s;
      }
      break;
    }
    case Op::ExpectedCost: {
      Tensor& ga = grad_sink(n.a);
      const double loss = n.value[0];
      for (int i = 0; i < ga.cols; ++i) ga(0, i) += g[0] * n.aux(1, i) * (n.aux(0, i) - loss);
      break;
    }
  }
}

}  // namespace dact
