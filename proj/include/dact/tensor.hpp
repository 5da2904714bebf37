// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dact {

/// Error raised for contract violations (bad shapes, malformed input, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Vectors are 1 x n rows; scalars are 1 x 1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  Tensor(int r, int c, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor row(std::span<const double> values);

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::span<double> row_span(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const double> row_span(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  void fill(double v);
  double item() const;
  bool all_finite() const;
  std::string shape_str() const;
};

}  // namespace dact
