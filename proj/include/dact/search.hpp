// SPDX-License-Identifier: Apache-2.0
//
// Decoding for the seq2seq tagger. Output length always equals the window
// length (one label per utterance), so there is no end-of-sequence symbol and
// every live hypothesis has the same length at every step.
#pragma once

#include <cstdint>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/tensor.hpp"

namespace dact {

class Seq2SeqModel;

struct BeamConfig {
  int width = 1;
  double alpha = 0.65;  // length-penalty exponent
};

struct Hypothesis {
  std::vector<int> labels;
  double logprob = 0.0;
  double score = 0.0;  // logprob / length_penalty(|labels|)
  Tensor state;        // decoder state after the last label
};

/// lp(n) = (5 + n)^alpha / 6^alpha.
double length_penalty(int length, double alpha);

/// Keeps the `width` best prefixes by normalised score at every step. The
/// result is sorted best first; equal scores are ordered lexicographically by
/// label sequence.
std::vector<Hypothesis> beam_search(const Seq2SeqModel& model, const EncodedWindow& window, const BeamConfig& cfg);

/// Scores every label sequence of the window's length and returns the best
/// (the lexicographically first among equals). Throws when |Y|^L > cap.
Hypothesis exhaustive_decode(const Seq2SeqModel& model, const EncodedWindow& window, double alpha = 0.65,
                             std::uint64_t cap = 1000000);

}  // namespace dact
