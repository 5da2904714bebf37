#include <cmath>

#include "doctest.h"
#include "dact/optim.hpp"
#include "dact/params.hpp"

using namespace dact;

TEST_CASE("adam first step moves by lr against the gradient sign") {
  ParamStore store;
  Param& w = store.add("w", 1, 3);
  w.value = Tensor(1, 3, {0.5, -1.0, 2.0});
  w.grad.fill(1.0);
  AdamConfig cfg;
  cfg.lr = 0.01;
  adam_step(store, cfg);
  CHECK(w.value[0] == doctest::Approx(0.49).epsilon(1e-9));
  CHECK(w.value[1] == doctest::Approx(-1.01).epsilon(1e-9));
  CHECK(w.value[2] == doctest::Approx(1.99).epsilon(1e-9));
  CHECK(store.step == 1);
}

TEST_CASE("adam leaves parameters alone for zero gradients") {
  ParamStore store;
  Param& w = store.add("w", 2, 2);
  w.value = Tensor(2, 2, {1, 2, 3, 4});
  const Tensor before = w.value;
  for (int i = 0; i < 5; ++i) adam_step(store, AdamConfig{});
  CHECK(w.value.data == before.data);
}

TEST_CASE("adamw decays weights independently of the gradient") {
  ParamStore store;
  Param& w = store.add("w", 1, 2);
  w.value = Tensor(1, 2, {2.0, -3.0});
  AdamConfig cfg;
  cfg.lr = 0.001;
  cfg.weight_decay = 5e-5;
  cfg.decoupled = true;
  adam_step(store, cfg);
  CHECK(w.value[0] == 2.0 - 0.001 * 5e-5 * 2.0);
  CHECK(w.value[1] == -3.0 + 0.001 * 5e-5 * 3.0);
}

TEST_CASE("coupled weight decay enters the moments") {
  ParamStore store;
  Param& w = store.add("w", 1, 1);
  w.value = Tensor::scalar(2.0);
  AdamConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  adam_step(store, cfg);
  // g = 0 + 0.1 * 2, so the first step is a full -lr.
  CHECK(w.value.item() == doctest::Approx(1.99).epsilon(1e-9));
}

TEST_CASE("adam rejects non-finite gradients") {
  ParamStore store;
  Param& w = store.add("w", 1, 1);
  w.grad[0] = std::nan("");
  CHECK_THROWS_WITH_AS(adam_step(store, AdamConfig{}), doctest::Contains("'w'"), Error);
}

TEST_CASE("adam is deterministic") {
  auto run = [] {
    ParamStore store;
    Param& w = store.add("w", 1, 3);
    for (int s = 0; s < 4; ++s) {
      w.grad = Tensor(1, 3, {0.3 * s, -1.0, 1e-3});
      adam_step(store, AdamConfig{});
    }
    return w.value.data;
  };
  CHECK(run() == run());
}

TEST_CASE("gradient clipping") {
  ParamStore store;
  Param& g = store.add("g", 1, 2);
  g.grad = Tensor(1, 2, {3, 4});
  CHECK(clip_grad_norm(store, 5.0) == 5.0);
  CHECK(g.grad[0] == 3.0);
  CHECK(g.grad[1] == 4.0);
  g.grad = Tensor(1, 2, {6, 8});
  CHECK(clip_grad_norm(store, 5.0) == 10.0);
  CHECK(g.grad[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(g.grad[1] == doctest::Approx(4.0).epsilon(1e-15));
  g.grad.fill(0.0);
  CHECK(clip_grad_norm(store, 5.0) == 0.0);
  CHECK(g.grad[0] == 0.0);
}

TEST_CASE("clipping uses the global norm across parameters") {
  ParamStore store;
  store.add("a", 1, 1).grad[0] = 6.0;
  store.add("b", 1, 1).grad[0] = 8.0;
  clip_grad_norm(store, 5.0);
  CHECK(store.get("a").grad[0] == doctest::Approx(3.0));
  CHECK(store.get("b").grad[0] == doctest::Approx(4.0));
  CHECK(grad_norm(store) == doctest::Approx(5.0));
}

TEST_CASE("plateau scheduler decays after patience non-improving epochs") {
  PlateauScheduler s(0.01, 20, 0.5);
  s.step(0.5);
  for (int i = 0; i < 19; ++i) CHECK_FALSE(s.step(0.5));
  CHECK(s.lr == 0.01);
  CHECK(s.step(0.4));
  CHECK(s.lr == 0.005);
  CHECK(s.bad_epochs == 0);
}

TEST_CASE("improvement resets the counter") {
  PlateauScheduler s(0.01, 3, 0.5);
  s.step(0.1);
  s.step(0.1);
  s.step(0.1);
  CHECK(s.bad_epochs == 2);
  s.step(0.2);
  CHECK(s.bad_epochs == 0);
  CHECK(s.lr == 0.01);
  CHECK_THROWS_AS(s.step(std::nan("")), Error);
}

TEST_CASE("mrda schedule") {
  PlateauScheduler s(0.001, 15, 0.5);
  s.step(1.0);
  for (int i = 0; i < 14; ++i) s.step(0.0);
  CHECK(s.lr == 0.001);
  s.step(0.0);
  CHECK(s.lr == 0.0005);
}
