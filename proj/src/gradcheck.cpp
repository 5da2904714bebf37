// SPDX-License-Identifier: Apache-2.0
#include "dact/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dact {

namespace {

double eval_loss(const LossBuilder& loss) {
  Tape tape(false);
  const double v = loss(tape).value().item();
  if (!std::isfinite(v)) throw Error("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckResult grad_check(ParamStore& store, const LossBuilder& loss, double eps, int max_coords, std::uint64_t seed) {
  store.zero_grad();
  {
    Tape tape;
    Var out = loss(tape);
    if (!std::isfinite(out.value().item())) throw Error("grad_check: non-finite loss");
    tape.backward(out);
  }
  GradCheckResult res;
  std::mt19937_64 rng(seed);
  for (std::size_t pi = 0; pi < store.size(); ++pi) {
    Param& p = store[pi];
    std::vector<int> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords > 0 && static_cast<int>(coords.size()) > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (int k : coords) {
      const double orig = p.value[k];
      p.value[k] = orig + eps;
      const double up = eval_loss(loss);
      p.value[k] = orig - eps;
      const double down = eval_loss(loss);
      p.value[k] = orig;
      const double fd = (up - down) / (2.0 * eps);
      const double err = std::abs(p.grad[k] - fd) / std::max(1.0, std::abs(fd));
      ++res.coords_checked;
      if (err > res.max_rel_error || res.worst_index < 0) {
        res.max_rel_error = std::max(res.max_rel_error, err);
        res.worst_param = p.name;
        res.worst_index = k;
      }
    }
  }
  return res;
}

}  // namespace dact
