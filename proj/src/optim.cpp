// SPDX-License-Identifier: Apache-2.0
#include "dact/optim.hpp"

#include <cmath>

namespace dact {

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store[i].grad.all_finite()) throw Error("adam_step: non-finite gradient in '" + store[i].name + "'");
  }
  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    if (p.m.size() != p.value.size()) p.m = Tensor(p.value.rows, p.value.cols);
    if (p.v.size() != p.value.size()) p.v = Tensor(p.value.rows, p.value.cols);
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      double g = p.grad[k];
      double& w = p.value[k];
      if (cfg.decoupled) {
        w -= cfg.lr * cfg.weight_decay * w;
      } else {
        g += cfg.weight_decay * w;
      }
      p.m[k] = cfg.beta1 * p.m[k] + (1.0 - cfg.beta1) * g;
      p.v[k] = cfg.beta2 * p.v[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = p.m[k] / bc1;
      const double v_hat = p.v[k] / bc2;
      w -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double grad_norm(const ParamStore& store) {
  double sq = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i)
    for (double g : store[i].grad.data) sq += g * g;
  return std::sqrt(sq);
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = grad_norm(store);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (std::size_t i = 0; i < store.size(); ++i)
      for (double& g : store[i].grad.data) g *= s;
  }
  return norm;
}

PlateauScheduler::PlateauScheduler(double lr_, int patience_, double factor_)
    : lr(lr_), factor(factor_), patience(patience_) {
  if (!(lr_ > 0.0)) throw Error("PlateauScheduler: learning rate must be positive");
  if (!(factor_ > 0.0 && factor_ < 1.0)) throw Error("PlateauScheduler: decay factor must be in (0, 1)");
  if (patience_ < 1) throw Error("PlateauScheduler: patience must be >= 1");
}

bool PlateauScheduler::step(double metric) {
  if (!std::isfinite(metric)) throw Error("PlateauScheduler: non-finite metric");
  if (metric > best) {
    best = metric;
    bad_epochs = 0;
    return false;
  }
  if (++bad_epochs >= patience) {
    lr *= factor;
    bad_epochs = 0;
    return true;
  }
  return false;
}

}  // namespace dact
