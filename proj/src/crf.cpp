// SPDX-License-Identifier: Apache-2.0
#include "dact/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dact::crf {

namespace {

double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double start_score(const Tensor* start, int c) { return start ? (*start)(0, c) : 0.0; }

// alpha(t, c) = log sum over prefixes ending in c at t.
Tensor forward_table(const Tensor& unary, const Tensor& trans, const Tensor* start) {
  const int L = unary.rows, Y = unary.cols;
  Tensor alpha(L, Y);
  for (int c = 0; c < Y; ++c) alpha(0, c) = start_score(start, c) + unary(0, c);
  std::vector<double> buf(Y);
  for (int t = 1; t < L; ++t) {
    for (int c = 0; c < Y; ++c) {
      for (int p = 0; p < Y; ++p) buf[p] = alpha(t - 1, p) + trans(p, c);
      alpha(t, c) = log_sum_exp(buf) + unary(t, c);
    }
  }
  return alpha;
}

}  // namespace

void check_shapes(const Tensor& unary, const Tensor& trans, const Tensor* start) {
  if (unary.rows < 1 || unary.cols < 1) throw Error("crf: unary scores must be L x Y with L >= 1");
  if (trans.rows != unary.cols || trans.cols != unary.cols) {
    throw Error("crf: transitions " + trans.shape_str() + " do not match " + std::to_string(unary.cols) + " labels");
  }
  if (start && (start->rows != 1 || start->cols != unary.cols)) {
    throw Error("crf: start scores " + start->shape_str() + " do not match " + std::to_string(unary.cols) + " labels");
  }
}

double path_score(const Tensor& unary, const Tensor& trans, const Tensor* start, std::span<const int> labels) {
  check_shapes(unary, trans, start);
  if (static_cast<int>(labels.size()) != unary.rows) throw Error("crf: path length does not match unary rows");
  double s = start_score(start, labels[0]) + unary(0, labels[0]);
  for (int t = 1; t < unary.rows; ++t) s += trans(labels[t - 1], labels[t]) + unary(t, labels[t]);
  return s;
}

double log_partition(const Tensor& unary, const Tensor& trans, const Tensor* start) {
  check_shapes(unary, trans, start);
  const Tensor alpha = forward_table(unary, trans, start);
  return log_sum_exp(alpha.row_span(unary.rows - 1));
}

Marginals marginals(const Tensor& unary, const Tensor& trans, const Tensor* start) {
  check_shapes(unary, trans, start);
  const int L = unary.rows, Y = unary.cols;
  const Tensor alpha = forward_table(unary, trans, start);
  Tensor beta(L, Y);  // beta(L-1, .) = 0
  std::vector<double> buf(Y);
  for (int t = L - 2; t >= 0; --t) {
    for (int p = 0; p < Y; ++p) {
      for (int c = 0; c < Y; ++c) buf[c] = trans(p, c) + unary(t + 1, c) + beta(t + 1, c);
      beta(t, p) = log_sum_exp(buf);
    }
  }
  Marginals out;
  out.log_z = log_sum_exp(alpha.row_span(L - 1));
  out.unary = Tensor(L, Y);
  out.pair = Tensor(Y, Y);
  for (int t = 0; t < L; ++t)
    for (int c = 0; c < Y; ++c) out.unary(t, c) = std::exp(alpha(t, c) + beta(t, c) - out.log_z);
  for (int t = 1; t < L; ++t)
    for (int p = 0; p < Y; ++p)
      for (int c = 0; c < Y; ++c)
        out.pair(p, c) += std::exp(alpha(t - 1, p) + trans(p, c) + unary(t, c) + beta(t, c) - out.log_z);
  return out;
}

std::vector<int> viterbi(const Tensor& unary, const Tensor& trans, const Tensor* start) {
  check_shapes(unary, trans, start);
  const int L = unary.rows, Y = unary.cols;
  Tensor best(L, Y);
  std::vector<int> back(static_cast<std::size_t>(L) * Y, 0);
  for (int c = 0; c < Y; ++c) best(0, c) = start_score(start, c) + unary(0, c);
  for (int t = 1; t < L; ++t) {
    for (int c = 0; c < Y; ++c) {
      int arg = 0;
      double top = best(t - 1, 0) + trans(0, c);
      for (int p = 1; p < Y; ++p) {
        const double s = best(t - 1, p) + trans(p, c);
        if (s > top) top = s, arg = p;
      }
      best(t, c) = top + unary(t, c);
      back[static_cast<std::size_t>(t) * Y + c] = arg;
    }
  }
  std::vector<int> path(L);
  const auto last = best.row_span(L - 1);
  path[L - 1] = static_cast<int>(std::max_element(last.begin(), last.end()) - last.begin());
  for (int t = L - 1; t > 0; --t) path[t - 1] = back[static_cast<std::size_t>(t) * Y + path[t]];
  return path;
}

}  // namespace dact::crf
