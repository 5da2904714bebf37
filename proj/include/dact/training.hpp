// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dact/config.hpp"
#include "dact/corpus.hpp"
#include "dact/model.hpp"
#include "dact/optim.hpp"
#include "dact/search.hpp"

namespace dact {

/// Cost of a candidate label sequence against the gold one: 1/0 on
/// mismatch/match (ZeroOne) or the fraction of differing positions (Hamming).
double sequence_cost(std::span<const int> candidate, std::span<const int> gold, CostKind kind);

/// Expected cost over a candidate set with probabilities renormalised inside
/// the set. `logprobs` are scalar nodes log p(candidate | window).
Var risk_loss(std::span<const Var> logprobs, std::span<const double> costs);

struct EvalReport {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  std::vector<std::vector<std::int64_t>> confusion;  // [gold][predicted]
  std::uint64_t seed = 0;

  explicit EvalReport(int num_labels = 0)
      : confusion(num_labels, std::vector<std::int64_t>(num_labels, 0)) {}

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  void add(int gold, int predicted);
  void merge(const EvalReport& other);
};

/// Predictions for every window. The serial version is the reference; the
/// parallel one splits windows across OpenMP threads over a frozen model and
/// returns identical results in the same order.
std::vector<Prediction> predict_all_serial(const Tagger& model, std::span<const EncodedWindow> windows, int beam,
                                           double alpha);
std::vector<Prediction> predict_all(const Tagger& model, std::span<const EncodedWindow> windows, int beam,
                                    double alpha);

/// Last-label accuracy: each window is decoded whole and only its last
/// position is scored.
EvalReport evaluate_serial(const Tagger& model, std::span<const EncodedWindow> windows, int beam, double alpha);
EvalReport evaluate(const Tagger& model, std::span<const EncodedWindow> windows, int beam, double alpha);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_dev_accuracy = -1.0;
  int best_epoch = 0;
};

/// Writes one "epoch<TAB>train_loss<TAB>dev_accuracy<TAB>lr" line.
void write_metrics_line(std::ostream& out, const EpochMetrics& m);

/// Token-level (or CRF) training: seeded shuffling, mini-batches of
/// cfg.batch_size windows, gradient clipping, Adam/AdamW, plateau scheduling on
/// dev last-label accuracy. The best-dev parameters are restored at the end.
TrainResult train(Tagger& model, std::span<const EncodedWindow> train_set, std::span<const EncodedWindow> dev_set,
                  const TrainConfig& cfg, std::ostream* metrics_log = nullptr);

/// Sequence-level fine-tuning with risk_loss over beam_search(cfg.beam_train)
/// candidates, for cfg.risk_epochs epochs.
TrainResult finetune_risk(Seq2SeqModel& model, std::span<const EncodedWindow> train_set,
                          std::span<const EncodedWindow> dev_set, const TrainConfig& cfg,
                          std::ostream* metrics_log = nullptr);

/// One RISK objective for a window given its candidate label sequences.
Var risk_objective(const Seq2SeqModel& model, Tape& tape, const EncodedWindow& window,
                   const std::vector<std::vector<int>>& candidates, CostKind cost, const ForwardOptions& opts);

AdamConfig adam_config(const TrainConfig& cfg, double lr);

}  // namespace dact
