// Shared fixtures for the unit tests.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/model.hpp"
#include "dact/params.hpp"

namespace testing {

inline void randomize(dact::Tensor& t, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& x : t.data) x = u(rng);
}

inline dact::Tensor random_tensor(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  dact::Tensor t(r, c);
  randomize(t, rng, scale);
  return t;
}

inline void randomize_params(dact::ParamStore& store, std::mt19937_64& rng, double scale = 0.5) {
  for (std::size_t i = 0; i < store.size(); ++i) randomize(store[i].value, rng, scale);
}

inline void zero_params(dact::ParamStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) store[i].value.fill(0.0);
}

/// A window with random token ids in [2, vocab) and the given speakers.
inline dact::EncodedWindow random_window(int length, int vocab, int num_labels, std::mt19937_64& rng,
                                         std::vector<int> speakers = {}) {
  dact::EncodedWindow w;
  std::uniform_int_distribution<int> tok(2, vocab - 1), len(1, 4), lab(0, num_labels - 1), spk(0, 1);
  for (int k = 0; k < length; ++k) {
    std::vector<int> t(len(rng));
    for (auto& x : t) x = tok(rng);
    w.tokens.push_back(t);
    w.labels.push_back(lab(rng));
    w.speakers.push_back(speakers.empty() ? spk(rng) : speakers[k]);
  }
  w.conversation_id = "c";
  w.last_index = length - 1;
  return w;
}

inline dact::ModelConfig tiny_config(dact::EncoderKind kind, dact::AttentionMode mode, int num_labels = 3,
                                     int vocab = 12, std::uint64_t seed = 1) {
  dact::ModelConfig c;
  c.init_seed = seed;
  c.encoder.kind = kind;
  c.encoder.vocab_size = vocab;
  c.encoder.emb_dim = 3;
  c.encoder.word_hidden = 2;
  c.encoder.persona_hidden = 2;
  c.encoder.sentence_hidden = 2;
  c.decoder.attention = mode;
  c.decoder.num_labels = num_labels;
  c.decoder.label_dim = 2;
  c.decoder.hidden = 3;
  c.decoder.attention_dim = 2;
  c.decoder.encoder_dim = c.encoder.output_dim();
  return c;
}

}  // namespace testing
