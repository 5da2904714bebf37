// SPDX-License-Identifier: Apache-2.0
#include "dact/search.hpp"

#include <algorithm>
#include <cmath>

#include "dact/model.hpp"

namespace dact {

double length_penalty(int length, double alpha) {
  if (length < 1) throw Error("length_penalty: length must be >= 1");
  return std::pow((5.0 + length) / 6.0, alpha);
}

namespace {

struct Candidate {
  int parent;
  int label;
  double logprob;
  double score;
};

}  // namespace

std::vector<Hypothesis> beam_search(const Seq2SeqModel& model, const EncodedWindow& window, const BeamConfig& cfg) {
  if (cfg.width < 1) throw Error("beam_search: beam width must be >= 1");
  if (cfg.alpha < 0.0) throw Error("beam_search: length-penalty exponent must be >= 0");
  const Decoder& dec = model.decoder();
  Tape tape(false);
  DecoderContext ctx = model.prepare(tape, window);

  std::vector<Hypothesis> beam(1);
  beam[0].state = dec.initial_state(tape, ctx).value();
  std::vector<Candidate> cands;
  for (int k = 0; k < ctx.length; ++k) {
    const double lp = length_penalty(k + 1, cfg.alpha);
    cands.clear();
    std::vector<Tensor> next_states(beam.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      const Hypothesis& h = beam[i];
      const int prev = h.labels.empty() ? dec.sos() : h.labels.back();
      StepOutput s = dec.step(tape, ctx, prev, tape.constant(h.state), k);
      next_states[i] = s.state.value();
      const Tensor& logp = s.logprobs.value();
      for (int y = 0; y < logp.cols; ++y) {
        const double total = h.logprob + logp(0, y);
        cands.push_back(Candidate{static_cast<int>(i), y, total, total / lp});
      }
    }
    // Parents are already in lexicographic-tiebreak order, so (parent, label)
    // order is the lexicographic order of the extended sequences among ties.
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return beam[a.parent].labels < beam[b.parent].labels;
      return a.label < b.label;
    };
    const std::size_t keep = std::min<std::size_t>(cfg.width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);
    std::vector<Hypothesis> next(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      next[i].labels = beam[c.parent].labels;
      next[i].labels.push_back(c.label);
      next[i].logprob = c.logprob;
      next[i].score = c.score;
      next[i].state = next_states[c.parent];
    }
    beam = std::move(next);
  }
  return beam;
}

Hypothesis exhaustive_decode(const Seq2SeqModel& model, const EncodedWindow& window, double alpha,
                             std::uint64_t cap) {
  const int L = window.size();
  const int Y = model.num_labels();
  std::uint64_t total = 1;
  for (int k = 0; k < L; ++k) {
    total *= static_cast<std::uint64_t>(Y);
    if (total > cap) throw Error("exhaustive_decode: |Y|^L exceeds the enumeration cap");
  }
  Tape tape(false);
  DecoderContext ctx = model.prepare(tape, window);
  const double lp = length_penalty(L, alpha);
  std::vector<int> seq(L, 0);
  Hypothesis best;
  bool have = false;
  const std::size_t mark = tape.size();
  for (std::uint64_t n = 0; n < total; ++n) {
    const double logprob = model.sequence_logprob(tape, ctx, seq).value().item();
    const double score = logprob / lp;
    if (!have || score > best.score) {
      best.labels = seq;
      best.logprob = logprob;
      best.score = score;
      have = true;
    }
    tape.truncate(mark);
    // odometer increment, last position fastest: lexicographic enumeration
    for (int k = L - 1; k >= 0; --k) {
      if (++seq[k] < Y) break;
      seq[k] = 0;
    }
  }
  return best;
}

}  // namespace dact
