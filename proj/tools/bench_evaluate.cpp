// SPDX-License-Identifier: Apache-2.0
// Serial versus OpenMP evaluation on a synthetic corpus.
#include <chrono>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "dact/synthetic.hpp"
#include "dact/training.hpp"

using namespace dact;

namespace {

template <typename F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

bool same(const std::vector<Prediction>& a, const std::vector<Prediction>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].labels != b[i].labels || a[i].score != b[i].score) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark serial and parallel evaluation"};
  int conversations = 200, beam = 5, repeats = 3, threads = 0, train_epochs = 1;
  std::string profile = "swda", model = "seq2seq", encoder = "hgru", attention = "hard";
  app.add_option("--conversations", conversations, "Synthetic conversations to evaluate");
  app.add_option("--beam", beam, "Inference beam width");
  app.add_option("--repeats", repeats, "Timed repetitions (best is reported)");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  app.add_option("--profile", profile, "Config profile for model sizes");
  app.add_option("--model", model, "seq2seq or crf");
  app.add_option("--encoder", encoder, "vgru, hgru or persohgru");
  app.add_option("--attention", attention, "additive, soft, hard or none");
  app.add_option("--train-epochs", train_epochs, "Training epochs before timing (0: random weights)");
  CLI11_PARSE(app, argc, argv);

  try {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
    const int used = omp_get_max_threads();
#else
    const int used = 1;
#endif
    TrainConfig cfg = TrainConfig::profile_defaults(profile);
    cfg.set("model", model);
    cfg.set("encoder", encoder);
    cfg.set("attention", attention);
    cfg.beam_inf = beam;
    cfg.epochs = train_epochs;
    cfg.validate();

    auto corpus = make_synthetic_corpus(SyntheticKind::Global, conversations, 11);
    Vocabulary vocab = build_vocab(corpus, 1);
    auto windows = encode_windows(window_corpus(corpus, cfg.context), vocab, cfg.max_tokens);
    auto m = make_model(cfg.model_config(vocab.num_words(), vocab.num_labels()));
    if (train_epochs > 0) train(*m, windows, windows, cfg);

    std::vector<Prediction> serial, parallel;
    predict_all_serial(*m, windows, beam, cfg.length_alpha);
    const double ts = best_of(repeats, [&] { serial = predict_all_serial(*m, windows, beam, cfg.length_alpha); });
    const double tp = best_of(repeats, [&] { parallel = predict_all(*m, windows, beam, cfg.length_alpha); });
    const bool identical = same(serial, parallel);
    const EvalReport rs = evaluate_serial(*m, windows, beam, cfg.length_alpha);
    const EvalReport rp = evaluate(*m, windows, beam, cfg.length_alpha);

    fmt::print("model {} / {} / {}, profile {}, {} windows, beam {}\n", model, encoder, attention, profile,
               windows.size(), beam);
    fmt::print("serial    {:8.3f} s  {:8.1f} windows/s\n", ts, windows.size() / ts);
    fmt::print("parallel  {:8.3f} s  {:8.1f} windows/s  ({} threads, speedup {:.2f}x)\n", tp, windows.size() / tp,
               used, ts / tp);
    fmt::print("predictions {}, accuracy serial {:.4f} parallel {:.4f}\n", identical ? "identical" : "DIFFER",
               rs.accuracy(), rp.accuracy());
    return identical && rs.confusion == rp.confusion ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
