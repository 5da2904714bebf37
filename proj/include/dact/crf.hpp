// SPDX-License-Identifier: Apache-2.0
//
// Linear-chain CRF dynamic programs over plain tensors. A label path y has
// score  start[y_0] + sum_t unary(t, y_t) + sum_{t>0} trans(y_{t-1}, y_t).
#pragma once

#include <span>
#include <vector>

#include "dact/tensor.hpp"

namespace dact::crf {

/// Unnormalised score of one path. `start` may be null (treated as zeros).
double path_score(const Tensor& unary, const Tensor& trans, const Tensor* start, std::span<const int> labels);

/// log of the sum of exp(path_score) over all |Y|^L paths (forward algorithm).
double log_partition(const Tensor& unary, const Tensor& trans, const Tensor* start = nullptr);

struct Marginals {
  double log_z = 0.0;
  Tensor unary;  // L x Y, P(y_t = c)
  Tensor pair;   // Y x Y, sum_t P(y_{t-1} = p, y_t = c)
};

/// Forward-backward posterior marginals.
Marginals marginals(const Tensor& unary, const Tensor& trans, const Tensor* start = nullptr);

/// Highest-scoring path. Ties go to the lower label index.
std::vector<int> viterbi(const Tensor& unary, const Tensor& trans, const Tensor* start = nullptr);

void check_shapes(const Tensor& unary, const Tensor& trans, const Tensor* start);

}  // namespace dact::crf
