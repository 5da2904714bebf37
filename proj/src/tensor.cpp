// SPDX-License-Identifier: Apache-2.0
#include "dact/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace dact {

Tensor::Tensor(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * c) {
    throw Error("Tensor: " + std::to_string(data.size()) + " values do not fit shape " +
                std::to_string(r) + "x" + std::to_string(c));
  }
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor(1, static_cast<int>(values.size()), std::vector<double>(values.begin(), values.end()));
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

double Tensor::item() const {
  if (data.size() != 1) throw Error("Tensor::item on shape " + shape_str());
  return data[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

}  // namespace dact
