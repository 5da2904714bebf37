// SPDX-License-Identifier: Apache-2.0
#include "dact/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dact {

double sequence_cost(std::span<const int> candidate, std::span<const int> gold, CostKind kind) {
  if (candidate.size() != gold.size()) throw Error("sequence_cost: length mismatch");
  if (kind == CostKind::ZeroOne) return std::equal(candidate.begin(), candidate.end(), gold.begin()) ? 0.0 : 1.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) diff += candidate[i] != gold[i];
  return gold.empty() ? 0.0 : static_cast<double>(diff) / static_cast<double>(gold.size());
}

Var risk_loss(std::span<const Var> logprobs, std::span<const double> costs) {
  if (logprobs.empty()) throw Error("risk_loss: empty candidate set");
  return expected_cost(logprobs.size() == 1 ? logprobs[0] : concat_cols(logprobs), costs);
}

void EvalReport::add(int gold, int predicted) {
  ++total;
  if (gold == predicted) ++correct;
  confusion.at(gold).at(predicted) += 1;
}

void EvalReport::merge(const EvalReport& other) {
  if (confusion.size() != other.confusion.size()) throw Error("EvalReport::merge: label count mismatch");
  correct += other.correct;
  total += other.total;
  for (std::size_t g = 0; g < confusion.size(); ++g)
    for (std::size_t p = 0; p < confusion.size(); ++p) confusion[g][p] += other.confusion[g][p];
}

namespace {

int label_count(const Tagger& model) { return model.config().decoder.num_labels; }

}  // namespace

std::vector<Prediction> predict_all_serial(const Tagger& model, std::span<const EncodedWindow> windows, int beam,
                                           double alpha) {
  std::vector<Prediction> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(model.predict(w, beam, alpha));
  return out;
}

std::vector<Prediction> predict_all(const Tagger& model, std::span<const EncodedWindow> windows, int beam,
                                    double alpha) {
  std::vector<Prediction> out(windows.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(windows.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = model.predict(windows[i], beam, alpha);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

EvalReport score(const Tagger& model, std::span<const EncodedWindow> windows, const std::vector<Prediction>& preds) {
  EvalReport r(label_count(model));
  for (std::size_t i = 0; i < windows.size(); ++i) r.add(windows[i].labels.back(), preds[i].labels.back());
  return r;
}

}  // namespace

EvalReport evaluate_serial(const Tagger& model, std::span<const EncodedWindow> windows, int beam, double alpha) {
  return score(model, windows, predict_all_serial(model, windows, beam, alpha));
}

EvalReport evaluate(const Tagger& model, std::span<const EncodedWindow> windows, int beam, double alpha) {
  return score(model, windows, predict_all(model, windows, beam, alpha));
}

void write_metrics_line(std::ostream& out, const EpochMetrics& m) {
  out << fmt::format("{}\t{:.17g}\t{:.17g}\t{:.17g}\n", m.epoch, m.train_loss, m.dev_accuracy, m.lr);
  out.flush();
}

AdamConfig adam_config(const TrainConfig& cfg, double lr) {
  AdamConfig a;
  a.lr = lr;
  a.weight_decay = cfg.weight_decay;
  a.decoupled = cfg.optimizer == "adamw";
  return a;
}

namespace {

// Called once per mini-batch before any gradient work, with the batch's window indices.
using BatchHook = std::function<void(std::span<const std::size_t>)>;
using Objective = std::function<Var(Tape&, std::size_t, const ForwardOptions&)>;

TrainResult run_epochs(Tagger& model, std::span<const EncodedWindow> train_set, std::span<const EncodedWindow> dev_set,
                       const TrainConfig& cfg, int epochs, std::ostream* log, const Objective& objective,
                       const BatchHook& before_batch, std::uint64_t stream, bool keep_initial) {
  cfg.validate();
  if (train_set.empty()) throw Error("train: empty training set");
  if (dev_set.empty()) throw Error("train: empty dev set");
  ParamStore& store = model.params();
  PlateauScheduler sched(cfg.lr, cfg.patience, cfg.lr_factor);
  TrainResult result;
  std::vector<Tensor> best = store.snapshot();
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(cfg.seed, stream));
  Tape tape;
  if (keep_initial) {
    // The starting point competes for best-dev, so fine-tuning never ends worse on dev.
    result.best_dev_accuracy = evaluate(model, dev_set, cfg.beam_inf, cfg.length_alpha).accuracy();
  }

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      if (before_batch) before_batch(batch);
      store.zero_grad();
      for (std::size_t idx : batch) {
        tape.clear();
        ForwardOptions opts{true, mix_seed(cfg.seed, stream * 0x100000000ull + static_cast<std::uint64_t>(epoch) *
                                                                             train_set.size() + idx)};
        Var loss = objective(tape, idx, opts);
        const double v = loss.value().item();
        if (!std::isfinite(v)) {
          throw Error(fmt::format("train: non-finite loss at epoch {} on window {} ({}:{})", epoch, idx,
                                  train_set[idx].conversation_id, train_set[idx].last_index));
        }
        loss_sum += v;
        tape.backward(loss, 1.0 / static_cast<double>(batch.size()));
      }
      clip_grad_norm(store, cfg.clip_norm);
      adam_step(store, adam_config(cfg, sched.lr));
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(train_set.size());
    m.lr = sched.lr;
    m.dev_accuracy = evaluate(model, dev_set, cfg.beam_inf, cfg.length_alpha).accuracy();
    result.history.push_back(m);
    if (log) write_metrics_line(*log, m);
    if (m.dev_accuracy > result.best_dev_accuracy) {
      result.best_dev_accuracy = m.dev_accuracy;
      result.best_epoch = epoch;
      best = store.snapshot();
    }
    sched.step(m.dev_accuracy);
    if (cfg.target_dev_accuracy > 0.0 && m.dev_accuracy >= cfg.target_dev_accuracy) break;
  }
  store.restore(best);
  return result;
}

}  // namespace

TrainResult train(Tagger& model, std::span<const EncodedWindow> train_set, std::span<const EncodedWindow> dev_set,
                  const TrainConfig& cfg, std::ostream* metrics_log) {
  const Tagger& frozen = model;
  auto objective = [&](Tape& tape, std::size_t idx, const ForwardOptions& opts) {
    return frozen.loss(tape, train_set[idx], opts);
  };
  return run_epochs(model, train_set, dev_set, cfg, cfg.epochs, metrics_log, objective, nullptr, 1, false);
}

Var risk_objective(const Seq2SeqModel& model, Tape& tape, const EncodedWindow& window,
                   const std::vector<std::vector<int>>& candidates, CostKind cost, const ForwardOptions& opts) {
  if (candidates.empty()) throw Error("risk_loss: empty candidate set");
  DecoderContext ctx = model.prepare(tape, window, opts);
  std::vector<Var> logprobs;
  std::vector<double> costs;
  for (const auto& c : candidates) {
    logprobs.push_back(model.sequence_logprob(tape, ctx, c, opts));
    costs.push_back(sequence_cost(c, window.labels, cost));
  }
  return risk_loss(logprobs, costs);
}

TrainResult finetune_risk(Seq2SeqModel& model, std::span<const EncodedWindow> train_set,
                          std::span<const EncodedWindow> dev_set, const TrainConfig& cfg, std::ostream* metrics_log) {
  const CostKind cost = cfg.cost_kind();
  std::vector<std::vector<std::vector<int>>> candidates(train_set.size());
  const BeamConfig beam{cfg.beam_train, cfg.length_alpha};
  const Seq2SeqModel& frozen = model;
  // Candidate sets come from the current parameters; beam search is
  // read-only, so the batch fans out across threads before the serial update.
  auto before = [&](std::span<const std::size_t> batch) {
    std::exception_ptr failure;
    const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        const std::size_t idx = batch[i];
        auto hyps = beam_search(frozen, train_set[idx], beam);
        std::vector<std::vector<int>> seqs;
        for (auto& h : hyps) seqs.push_back(std::move(h.labels));
        candidates[idx] = std::move(seqs);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  };
  auto objective = [&](Tape& tape, std::size_t idx, const ForwardOptions& opts) {
    return risk_objective(frozen, tape, train_set[idx], candidates[idx], cost, opts);
  };
  return run_epochs(model, train_set, dev_set, cfg, cfg.risk_epochs, metrics_log, objective, before, 2, true);
}

}  // namespace dact
