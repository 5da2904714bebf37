// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>

#include "dact/params.hpp"

namespace dact {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  /// false: L2 term added to the gradient (Adam). true: decay applied to the
  /// weights directly, outside the moment estimates (AdamW).
  bool decoupled = false;
};

/// One bias-corrected Adam / AdamW update of every parameter from Param::grad.
/// Increments store.step. Throws on a non-finite gradient.
void adam_step(ParamStore& store, const AdamConfig& cfg);

/// Global L2 norm over all gradients.
double grad_norm(const ParamStore& store);

/// Rescales all gradients by max_norm / norm when the global norm exceeds
/// max_norm. Returns the norm measured before clipping.
double clip_grad_norm(ParamStore& store, double max_norm);

/// Reduce-on-plateau learning-rate schedule for a metric that should increase.
struct PlateauScheduler {
  double lr = 0.01;
  double factor = 0.5;
  int patience = 20;
  double best = -std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  PlateauScheduler() = default;
  PlateauScheduler(double lr_, int patience_, double factor_);

  /// Feeds one epoch's dev metric; returns true when the rate was decayed.
  bool step(double metric);
};

}  // namespace dact
