// SPDX-License-Identifier: Apache-2.0
#include "dact/synthetic.hpp"

#include <algorithm>
#include <random>

namespace dact {

SyntheticKind parse_synthetic_kind(const std::string& s) {
  if (s == "local") return SyntheticKind::Local;
  if (s == "global") return SyntheticKind::Global;
  throw Error("unknown synthetic corpus kind '" + s + "' (expected local or global)");
}

std::string to_string(SyntheticKind kind) { return kind == SyntheticKind::Local ? "local" : "global"; }

int local_rule(int previous_label, int keyword, int num_labels) {
  if (keyword != kAmbiguousKeyword) return keyword;
  const bool even = previous_label < 0 || previous_label % 2 == 0;
  return even ? num_labels - 1 : 0;
}

namespace {

constexpr int kFillers = 20;

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<std::string> utterance_tokens(std::mt19937_64& rng, const std::string& keyword) {
  std::vector<std::string> toks;
  const int n = uniform(rng, 1, 5);
  for (int i = 0; i < n; ++i) toks.push_back("w" + std::to_string(uniform(rng, 0, kFillers - 1)));
  toks.insert(toks.begin() + uniform(rng, 0, n), keyword);
  return toks;
}

}  // namespace

std::vector<Conversation> make_synthetic_corpus(SyntheticKind kind, int size, std::uint64_t seed, int num_labels) {
  if (size < 1) throw Error("make_synthetic_corpus: size must be >= 1");
  if (num_labels < 2) throw Error("make_synthetic_corpus: need at least 2 labels");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution switch_speaker(0.6);
  std::vector<Conversation> corpus(size);
  for (int c = 0; c < size; ++c) {
    Conversation& conv = corpus[c];
    conv.id = "syn" + std::to_string(seed) + "_" + std::to_string(c);
    const int len = uniform(rng, 4, 8);
    std::string speaker = uniform(rng, 0, 1) ? "A" : "B";
    std::vector<int> keys;
    int previous = -1;
    bool previous_ambiguous = false;
    for (int i = 0; i < len; ++i) {
      if (i > 0 && switch_speaker(rng)) speaker = speaker == "A" ? "B" : "A";
      Utterance u;
      u.speaker = speaker;
      int label = 0;
      if (kind == SyntheticKind::Local) {
        // Direct keywords get Y-1 slots, the ambiguous one a single slot.
        int kw = uniform(rng, 0, num_labels - 1);
        if (kw == num_labels - 1) kw = previous_ambiguous ? uniform(rng, 0, num_labels - 2) : kAmbiguousKeyword;
        previous_ambiguous = kw == kAmbiguousKeyword;
        label = local_rule(previous, kw, num_labels);
        u.tokens = utterance_tokens(rng, kw == kAmbiguousKeyword ? "amb" : "kw" + std::to_string(kw));
      } else {
        const int k = uniform(rng, 0, num_labels - 1);
        keys.push_back(k);
        label = i >= 2 ? keys[i - 2] : k;
        u.tokens = utterance_tokens(rng, "key" + std::to_string(k));
      }
      u.label = "da" + std::to_string(label);
      previous = label;
      conv.utterances.push_back(std::move(u));
    }
  }
  return corpus;
}

}  // namespace dact
