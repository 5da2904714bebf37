// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "dact/autodiff.hpp"

namespace dact {

using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  int coords_checked = 0;
};

/// Compares backward() against central differences
///   |analytic - fd| / max(1, |fd|),  fd = (f(w+eps) - f(w-eps)) / (2 eps)
/// on up to `max_coords` coordinates per parameter (all when <= 0), sampled
/// with `seed`. The loss must be deterministic. Leaves Param::grad holding
/// the analytic gradient.
GradCheckResult grad_check(ParamStore& store, const LossBuilder& loss, double eps = 1e-5, int max_coords = 0,
                           std::uint64_t seed = 0);

}  // namespace dact
