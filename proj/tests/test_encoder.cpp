#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "dact/encoder.hpp"
#include "dact/gradcheck.hpp"
#include "helpers.hpp"

using namespace dact;

namespace {

struct Gru {
  ParamStore store;
  GruParams fwd, bwd;
  Gru(int in, int hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    fwd = GruParams::create(store, "f", in, hidden, rng);
    bwd = GruParams::create(store, "b", in, hidden, rng);
    testing::randomize_params(store, rng, 0.8);
  }
};

void check_close(const Tensor& a, const Tensor& b, double tol = 1e-14) {
  REQUIRE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

Tensor rows_of(const Tensor& t, int first, int count) {
  Tensor out(count, t.cols);
  for (int r = 0; r < count; ++r)
    for (int c = 0; c < t.cols; ++c) out(r, c) = t(first + r, c);
  return out;
}

EncoderConfig small_encoder(EncoderKind kind) {
  EncoderConfig c;
  c.kind = kind;
  c.vocab_size = 12;
  c.emb_dim = 3;
  c.word_hidden = 2;
  c.persona_hidden = 3;
  c.sentence_hidden = 2;
  return c;
}

}  // namespace

TEST_CASE("gru cell with zero parameters stays at zero") {
  ParamStore store;
  std::mt19937_64 rng(1);
  GruParams g = GruParams::create(store, "g", 3, 4, rng);
  testing::zero_params(store);
  Tape t(false);
  const Tensor h = gru_cell(t.constant(Tensor(1, 3, 1.0)), t.constant(Tensor(1, 4)), bind(t, g)).value();
  for (double v : h.data) CHECK(v == 0.0);
}

TEST_CASE("saturated update gate carries the state") {
  ParamStore store;
  std::mt19937_64 rng(2);
  GruParams g = GruParams::create(store, "g", 3, 2, rng);
  for (int j = 2; j < 4; ++j) g.b->value[j] = 60.0;
  Tape t(false);
  const Tensor h0(1, 2, {0.3, -0.7});
  const Tensor h = gru_cell(t.constant(Tensor(1, 3, 0.5)), t.constant(h0), bind(t, g)).value();
  check_close(h, h0, 1e-12);
}

TEST_CASE("gru cell gradients") {
  std::mt19937_64 rng(3);
  ParamStore store;
  GruParams g = GruParams::create(store, "g", 3, 4, rng);
  Param& x = store.add("x", 1, 3);
  Param& h = store.add("h", 1, 4);
  testing::randomize_params(store, rng, 0.9);
  const Tensor readout = testing::random_tensor(1, 4, rng);
  auto loss = [&](Tape& t) { return sum(mul(gru_cell(t.param(x), t.param(h), bind(t, g)), t.constant(readout))); };
  CHECK(grad_check(store, loss).max_rel_error < 1e-6);
}

TEST_CASE("gru shape errors") {
  ParamStore store;
  std::mt19937_64 rng(4);
  GruParams g = GruParams::create(store, "g", 3, 2, rng);
  Tape t(false);
  GruVars v = bind(t, g);
  CHECK_THROWS_AS(gru_cell(t.constant(Tensor(1, 4)), t.constant(Tensor(1, 2)), v), Error);
  CHECK_THROWS_AS(gru_cell(t.constant(Tensor(1, 3)), t.constant(Tensor(1, 3)), v), Error);
  CHECK_THROWS_AS(bi_gru(t.constant(Tensor(0, 3)), v, v), Error);
  CHECK_THROWS_AS(bi_gru(t.constant(Tensor(2, 5)), v, v), Error);
}

TEST_CASE("bi-gru on one position takes one step each way") {
  Gru g(3, 2, 5);
  Tape t(false);
  const Tensor x(1, 3, {0.1, -0.4, 0.9});
  BiGruOutput o = bi_gru(t.constant(x), bind(t, g.fwd), bind(t, g.bwd));
  REQUIRE(o.states.size() == 1);
  const Tensor f = gru_cell(t.constant(x), t.constant(Tensor(1, 2)), bind(t, g.fwd)).value();
  const Tensor b = gru_cell(t.constant(x), t.constant(Tensor(1, 2)), bind(t, g.bwd)).value();
  const Tensor s = o.states[0].value();
  CHECK(s[0] == f[0]);
  CHECK(s[1] == f[1]);
  CHECK(s[2] == b[0]);
  CHECK(s[3] == b[1]);
}

TEST_CASE("reversing the input swaps directions") {
  Gru g(3, 2, 6);
  std::mt19937_64 rng(7);
  const Tensor x = testing::random_tensor(5, 3, rng);
  Tensor rev(5, 3);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 3; ++c) rev(r, c) = x(4 - r, c);
  Tape t(false);
  BiGruOutput a = bi_gru(t.constant(x), bind(t, g.fwd), bind(t, g.bwd));
  BiGruOutput b = bi_gru(t.constant(rev), bind(t, g.bwd), bind(t, g.fwd));
  for (int k = 0; k < 5; ++k) {
    const Tensor sa = a.states[k].value();
    const Tensor sb = b.states[4 - k].value();
    CHECK(sa[0] == sb[2]);
    CHECK(sa[1] == sb[3]);
    CHECK(sa[2] == sb[0]);
    CHECK(sa[3] == sb[1]);
  }
}

TEST_CASE("bi-gru with zero parameters") {
  Gru g(3, 2, 8);
  testing::zero_params(g.store);
  std::mt19937_64 rng(9);
  Tape t(false);
  BiGruOutput o = bi_gru(t.constant(testing::random_tensor(4, 3, rng)), bind(t, g.fwd), bind(t, g.bwd));
  for (double v : o.stacked.value().data) CHECK(v == 0.0);
}

TEST_CASE("mean utterance embedding") {
  Tape t(false);
  const Tensor m = embed_utterance_mean(t.constant(Tensor(2, 2, {1, 0, 0, 1}))).value();
  CHECK(m.data == std::vector<double>{0.5, 0.5});
  const Tensor one = embed_utterance_mean(t.constant(Tensor(1, 3, {0.25, -1, 2}))).value();
  CHECK(one.data == std::vector<double>{0.25, -1, 2});
  CHECK_THROWS_AS(embed_utterance_mean(t.constant(Tensor(0, 3))), Error);
}

TEST_CASE("hierarchical utterance embedding") {
  Gru g(3, 2, 10);
  std::mt19937_64 rng(11);
  Tape t(false);
  const Tensor x(1, 3, {0.5, 0.1, -0.2});
  const Tensor e = encode_utterance_hgru(t.constant(x), bind(t, g.fwd), bind(t, g.bwd)).value();
  const Tensor f = gru_cell(t.constant(x), t.constant(Tensor(1, 2)), bind(t, g.fwd)).value();
  const Tensor b = gru_cell(t.constant(x), t.constant(Tensor(1, 2)), bind(t, g.bwd)).value();
  CHECK(e.data == std::vector<double>{f[0], f[1], b[0], b[1]});

  const Tensor seq = testing::random_tensor(4, 3, rng);
  BiGruOutput o = bi_gru(t.constant(seq), bind(t, g.fwd), bind(t, g.bwd));
  const Tensor e4 = encode_utterance_hgru(t.constant(seq), bind(t, g.fwd), bind(t, g.bwd)).value();
  const Tensor last = o.states[3].value(), first = o.states[0].value();
  CHECK(e4.data == std::vector<double>{last[0], last[1], first[2], first[3]});

  testing::zero_params(g.store);
  for (double v : encode_utterance_hgru(t.constant(seq), bind(t, g.fwd), bind(t, g.bwd)).value().data) CHECK(v == 0.0);
  CHECK_THROWS_AS(encode_utterance_hgru(t.constant(Tensor(0, 3)), bind(t, g.fwd), bind(t, g.bwd)), Error);
}

TEST_CASE("hierarchical utterance embedding gradients") {
  Gru g(3, 2, 12);
  std::mt19937_64 rng(13);
  Param& x = g.store.add("x", 4, 3);
  testing::randomize(x.value, rng);
  const Tensor readout = testing::random_tensor(1, 4, rng);
  auto loss = [&](Tape& t) {
    return sum(mul(encode_utterance_hgru(t.param(x), bind(t, g.fwd), bind(t, g.bwd)), t.constant(readout)));
  };
  CHECK(grad_check(g.store, loss).max_rel_error < 1e-5);
}

TEST_CASE("persona resets on speaker change") {
  Gru g(3, 2, 14);
  std::mt19937_64 rng(15);
  const Tensor x = testing::random_tensor(4, 3, rng);
  Tape t(false);
  GruVars f = bind(t, g.fwd), b = bind(t, g.bwd);
  const Tensor p = persona_layer(t.constant(x), {0, 0, 1, 1}, f, b).stacked.value();
  const Tensor first = bi_gru(t.constant(rows_of(x, 0, 2)), f, b).stacked.value();
  const Tensor second = bi_gru(t.constant(rows_of(x, 2, 2)), f, b).stacked.value();
  const Tensor plain = bi_gru(t.constant(x), f, b).stacked.value();
  // Forward halves restart at position 2, backward halves at position 1.
  for (int c = 0; c < 4; ++c) {
    CHECK(p(0, c) == first(0, c));
    CHECK(p(1, c) == first(1, c));
    CHECK(p(2, c) == second(0, c));
    CHECK(p(3, c) == second(1, c));
  }
  CHECK(p(2, 0) != plain(2, 0));
  CHECK(p(1, 2) != plain(1, 2));
  CHECK(p(0, 0) == plain(0, 0));
  CHECK(p(3, 2) == plain(3, 2));
}

TEST_CASE("persona with one speaker is a plain bi-gru; alternating speakers isolate positions") {
  Gru g(3, 2, 16);
  std::mt19937_64 rng(17);
  const Tensor x = testing::random_tensor(4, 3, rng);
  Tape t(false);
  GruVars f = bind(t, g.fwd), b = bind(t, g.bwd);
  const Tensor same = persona_layer(t.constant(x), {3, 3, 3, 3}, f, b).stacked.value();
  check_close(same, bi_gru(t.constant(x), f, b).stacked.value(), 0.0);
  const Tensor alt = persona_layer(t.constant(x), {0, 1, 0, 1}, f, b).stacked.value();
  for (int k = 0; k < 4; ++k) {
    const Tensor alone = bi_gru(t.constant(rows_of(x, k, 1)), f, b).stacked.value();
    check_close(rows_of(alt, k, 1), alone, 0.0);
  }
  CHECK_THROWS_AS(persona_layer(t.constant(x), {0, 1}, f, b), Error);
}

TEST_CASE("encoder kinds parse and report sizes") {
  CHECK(parse_encoder_kind("vgru") == EncoderKind::VGRU);
  CHECK(parse_encoder_kind("hgru") == EncoderKind::HGRU);
  CHECK(parse_encoder_kind("persohgru") == EncoderKind::PersoHGRU);
  CHECK(to_string(EncoderKind::PersoHGRU) == "persohgru");
  CHECK_THROWS_AS(parse_encoder_kind("lstm"), Error);
  EncoderConfig c = small_encoder(EncoderKind::VGRU);
  CHECK(c.layers() == 2);
  c.kind = EncoderKind::HGRU;
  CHECK(c.layers() == 1);
  c.sentence_layers = 3;
  CHECK(c.layers() == 3);
}

TEST_CASE("encoder shape contracts for every kind") {
  for (auto kind : {EncoderKind::VGRU, EncoderKind::HGRU, EncoderKind::PersoHGRU}) {
    ParamStore store;
    std::mt19937_64 rng(18);
    Encoder enc(small_encoder(kind), store, rng);
    CHECK((store.find("enc.sent1.fwd.W") != nullptr) == (kind == EncoderKind::VGRU));
    CHECK((store.find("enc.persona.fwd.W") != nullptr) == (kind == EncoderKind::PersoHGRU));
    EncodedWindow w = testing::random_window(5, 12, 3, rng);
    Tape t(false);
    EncoderOutput o = enc.encode(t, w);
    CHECK(o.states.size() == 5);
    CHECK(o.stacked.rows() == 5);
    CHECK(o.summary.cols() == 4);
    CHECK(o.summary.value().data == o.states.back().value().data);
    CHECK(o.stacked.value().all_finite());
  }
}

TEST_CASE("one-utterance window with zero parameters") {
  ParamStore store;
  std::mt19937_64 rng(19);
  Encoder enc(small_encoder(EncoderKind::HGRU), store, rng);
  testing::zero_params(store);
  EncodedWindow w = testing::random_window(1, 12, 3, rng);
  Tape t(false);
  EncoderOutput o = enc.encode(t, w);
  CHECK(o.states.size() == 1);
  for (double v : o.summary.value().data) CHECK(v == 0.0);
}

TEST_CASE("word-level states do not leak across utterances") {
  ParamStore store;
  std::mt19937_64 rng(20);
  Encoder enc(small_encoder(EncoderKind::HGRU), store, rng);
  testing::randomize_params(store, rng);
  EncodedWindow w = testing::random_window(4, 12, 3, rng);
  w.tokens[2] = {3, 4, 5, 6};
  EncodedWindow p = w;
  p.tokens[2] = {6, 3, 5, 4};
  Tape t(false);
  const Tensor a = enc.encode(t, w).utterances.value();
  const Tensor b = enc.encode(t, p).utterances.value();
  for (int k : {0, 1, 3})
    for (int c = 0; c < a.cols; ++c) CHECK(a(k, c) == b(k, c));
  CHECK(a(2, 0) != b(2, 0));
}

TEST_CASE("encoder dropout only in training mode and reproducible per seed") {
  EncoderConfig c = small_encoder(EncoderKind::HGRU);
  c.dropout = 0.5;
  ParamStore store;
  std::mt19937_64 rng(21);
  Encoder enc(c, store, rng);
  EncodedWindow w = testing::random_window(5, 12, 3, rng);
  Tape t(false);
  const Tensor eval = enc.encode(t, w).stacked.value();
  CHECK(enc.encode(t, w, ForwardOptions{false, 9}).stacked.value().data == eval.data);
  const Tensor a = enc.encode(t, w, ForwardOptions{true, 9}).stacked.value();
  const Tensor b = enc.encode(t, w, ForwardOptions{true, 9}).stacked.value();
  CHECK(a.data == b.data);
  CHECK(a.data != eval.data);
}

TEST_CASE("end-to-end encoder gradients for every kind") {
  for (auto kind : {EncoderKind::VGRU, EncoderKind::HGRU, EncoderKind::PersoHGRU}) {
    ParamStore store;
    std::mt19937_64 rng(22);
    Encoder enc(small_encoder(kind), store, rng);
    testing::randomize_params(store, rng);
    EncodedWindow w = testing::random_window(3, 12, 3, rng, {0, 0, 1});
    const Tensor readout = testing::random_tensor(3, 4, rng);
    auto loss = [&](Tape& t) { return sum(mul(enc.encode(t, w).stacked, t.constant(readout))); };
    CHECK(grad_check(store, loss).max_rel_error < 1e-4);
  }
}
