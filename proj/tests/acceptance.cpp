// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "dact/crf.hpp"
#include "dact/gradcheck.hpp"
#include "dact/synthetic.hpp"
#include "dact/training.hpp"
#include "helpers.hpp"

using namespace dact;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS  " : "FAIL  ") << name << ": " << detail << std::endl;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::vector<std::vector<int>> all_paths(int L, int Y) {
  std::vector<std::vector<int>> out;
  std::vector<int> p(L, 0);
  while (true) {
    out.push_back(p);
    int k = L - 1;
    while (k >= 0 && ++p[k] == Y) p[k--] = 0;
    if (k < 0) return out;
  }
}

void gradient_fidelity() {
  Stopwatch clock;
  double worst = 0.0;
  std::string worst_at;
  int configs = 0;
  std::uint64_t seed = 1;
  for (auto kind : {EncoderKind::VGRU, EncoderKind::HGRU, EncoderKind::PersoHGRU}) {
    for (auto mode : {AttentionMode::Additive, AttentionMode::SoftGuided, AttentionMode::HardGuided,
                      AttentionMode::None}) {
      Seq2SeqModel m(testing::tiny_config(kind, mode, 3, 12, seed));
      std::mt19937_64 rng(seed++);
      testing::randomize_params(m.params(), rng, 0.8);
      EncodedWindow w = testing::random_window(3, 12, 3, rng, {0, 1, 1});
      const auto r = grad_check(m.params(), [&](Tape& t) { return m.token_nll(t, w); });
      ++configs;
      if (r.max_rel_error >= worst) {
        worst = r.max_rel_error;
        worst_at = to_string(kind) + "/" + to_string(mode) + " " + r.worst_param;
      }
    }
    ModelConfig c = testing::tiny_config(kind, AttentionMode::None, 3, 12, seed);
    c.kind = ModelKind::Crf;
    CrfModel crf(c);
    std::mt19937_64 rng(seed++);
    testing::randomize_params(crf.params(), rng, 0.8);
    EncodedWindow w = testing::random_window(3, 12, 3, rng, {0, 1, 1});
    const auto r = grad_check(crf.params(), [&](Tape& t) { return crf.nll(t, w); });
    ++configs;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_at = "crf/" + to_string(kind) + " " + r.worst_param;
    }
  }
  const double secs = clock.seconds();
  report(worst < 1e-4 && secs < 120.0, "gradient fidelity",
         fmt::format("{} losses (3 encoders x 4 attention modes + CRF per encoder), max rel err {:.3g} at {} "
                     "(< 1e-4), {:.1f} s (< 120 s)",
                     configs, worst, worst_at, secs));
}

void guided_attention() {
  int identity = 0;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    Seq2SeqModel m(testing::tiny_config(static_cast<EncoderKind>(i % 3), AttentionMode::HardGuided, 3, 12, 1000 + i));
    testing::randomize_params(m.params(), rng, 1.5);
    const int L = 1 + i % 5;
    auto rows = m.attention_matrix(testing::random_window(L, 12, 3, rng));
    bool ok = static_cast<int>(rows.size()) == L;
    for (int k = 0; k < L && ok; ++k)
      for (int j = 0; j < L; ++j) ok = ok && rows[k][j] == (j == k ? 1.0 : 0.0);
    identity += ok;
  }
  report(identity == 100, "hard-guided identity", fmt::format("{}/100 random windows give exactly the identity", identity));

  double worst = 0.0;
  for (int L = 2; L <= 5; ++L) {
    Seq2SeqModel m(testing::tiny_config(EncoderKind::HGRU, AttentionMode::SoftGuided, 3, 12, L));
    testing::randomize_params(m.params(), rng, 1.5);
    for (const char* name : {"dec.att.W1", "dec.att.W2", "dec.att.v"}) m.params().get(name).value.fill(0.0);
    const double e = std::exp(1.0);
    const double diag = e / (e + L - 1), off = 1.0 / (e + L - 1);
    auto rows = m.attention_matrix(testing::random_window(L, 12, 3, rng));
    for (int k = 0; k < L; ++k)
      for (int j = 0; j < L; ++j) worst = std::max(worst, std::abs(rows[k][j] - (j == k ? diag : off)));
  }
  report(worst <= 1e-12, "soft-guided diagonal",
         fmt::format("zeroed scorer, L = 2..5: max |alpha - e/(e+L-1) on diagonal, 1/(e+L-1) off| = {:.3g} (<= 1e-12)",
                     worst));
}

void oracle_equivalence() {
  Stopwatch clock;
  int beam_ok = 0;
  for (int i = 0; i < 200; ++i) {
    const auto mode = static_cast<AttentionMode>(i % 4);
    Seq2SeqModel m(testing::tiny_config(static_cast<EncoderKind>(i % 3), mode, 3, 12, 5000 + i));
    std::mt19937_64 rng(5000 + i);
    testing::randomize_params(m.params(), rng, 1.5);
    EncodedWindow w = testing::random_window(4, 12, 3, rng);
    beam_ok += beam_search(m, w, BeamConfig{81, 0.65}).front().labels == exhaustive_decode(m, w).labels;
  }
  int viterbi_ok = 0;
  double worst_lz = 0.0;
  const auto paths = all_paths(5, 4);
  for (int i = 0; i < 200; ++i) {
    std::mt19937_64 rng(9000 + i);
    const Tensor u = testing::random_tensor(5, 4, rng, 3.0);
    const Tensor tr = testing::random_tensor(4, 4, rng, 3.0);
    const Tensor st = testing::random_tensor(1, 4, rng, 3.0);
    double best = -1e300, m = -1e300;
    std::vector<int> arg;
    std::vector<double> scores;
    for (const auto& p : paths) {
      const double s = crf::path_score(u, tr, &st, p);
      scores.push_back(s);
      if (s > best) {
        best = s;
        arg = p;
      }
      m = std::max(m, s);
    }
    double acc = 0.0;
    for (double s : scores) acc += std::exp(s - m);
    worst_lz = std::max(worst_lz, std::abs(crf::log_partition(u, tr, &st) - (m + std::log(acc))));
    viterbi_ok += crf::viterbi(u, tr, &st) == arg;
  }
  const double secs = clock.seconds();
  report(beam_ok == 200 && viterbi_ok == 200 && worst_lz < 1e-8 && secs < 60.0, "oracle equivalence",
         fmt::format("beam(81) == exhaustive on {}/200 models (|Y|=3, L=4); viterbi == brute force on {}/200, "
                     "max |logZ - brute| = {:.3g} (< 1e-8) (|Y|=4, L=5); {:.1f} s (< 60 s)",
                     beam_ok, viterbi_ok, worst_lz, secs));
}

void risk_values() {
  auto value = [](std::vector<double> probs, std::vector<double> costs) {
    Tape t(false);
    std::vector<Var> lps;
    for (double p : probs) lps.push_back(t.constant(Tensor::scalar(std::log(p))));
    return risk_loss(lps, costs).value().item();
  };
  const double a = value({0.7}, {0.0});
  const double b = value({0.6, 0.2}, {0.0, 1.0});
  const double c = value({0.5, 0.3}, {1.0, 1.0});
  report(a == 0.0 && b == 0.25 && c == 1.0, "risk loss unit values",
         fmt::format("U={{gold}} -> {:.17g}, U={{gold p=.6, wrong p=.2}} -> {:.17g}, gold not in U -> {:.17g} "
                     "(exactly 0, 0.25, 1)",
                     a, b, c));
}

struct Split {
  std::vector<Conversation> train_conv, dev_conv;
  Vocabulary vocab;
  std::vector<EncodedWindow> train, dev;
};

Split split_corpus(SyntheticKind kind, int conversations, std::uint64_t seed, const TrainConfig& cfg) {
  Split s;
  auto corpus = make_synthetic_corpus(kind, conversations, seed);
  const int cut = conversations * 4 / 5;
  s.train_conv.assign(corpus.begin(), corpus.begin() + cut);
  s.dev_conv.assign(corpus.begin() + cut, corpus.end());
  s.vocab = build_vocab(s.train_conv, cfg.min_frequency);
  s.train = encode_windows(window_corpus(s.train_conv, cfg.context), s.vocab, cfg.max_tokens);
  s.dev = encode_windows(window_corpus(s.dev_conv, cfg.context), s.vocab, cfg.max_tokens);
  return s;
}

void overfit_local() {
#ifdef _OPENMP
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  TrainConfig cfg = TrainConfig::profile_defaults("synthetic");
  cfg.encoder = "hgru";
  cfg.attention = "hard";
  cfg.epochs = 200;
  cfg.target_dev_accuracy = 0.99;
  cfg.seed = 1;
  Split s = split_corpus(SyntheticKind::Local, 500, 1, cfg);
  Stopwatch clock;
  auto m = make_model(cfg.model_config(s.vocab.num_words(), s.vocab.num_labels()));
  TrainResult r = train(*m, s.train, s.dev, cfg);
  const double secs = clock.seconds();
  const double acc = evaluate(*m, s.dev, cfg.beam_inf, cfg.length_alpha).accuracy();
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
  report(acc >= 0.99 && r.best_epoch <= 200 && secs < 300.0, "overfit (local, HGRU + hard-guided)",
         fmt::format("dev last-label accuracy {:.4f} (>= 0.99) at epoch {} (<= 200), {} labels, T = {}, "
                     "{} train / {} dev windows from 500 conversations, {:.1f} s on 1 thread (< 300 s)",
                     acc, r.best_epoch, s.vocab.num_labels(), cfg.context, s.train.size(), s.dev.size(), secs));
}

void global_dependency() {
  TrainConfig cfg = TrainConfig::profile_defaults("synthetic");
  cfg.encoder = "hgru";
  cfg.attention = "hard";
  cfg.epochs = 100;
  cfg.target_dev_accuracy = 0.99;
  cfg.seed = 2;
  Split s = split_corpus(SyntheticKind::Global, 500, 2, cfg);
  Stopwatch clock;
  auto seq = make_model(cfg.model_config(s.vocab.num_words(), s.vocab.num_labels()));
  train(*seq, s.train, s.dev, cfg);
  const double seq_acc = evaluate(*seq, s.dev, cfg.beam_inf, cfg.length_alpha).accuracy();

  TrainConfig crf_cfg = cfg;
  crf_cfg.model = "crf";
  crf_cfg.epochs = 40;
  crf_cfg.target_dev_accuracy = 0.0;
  auto crf = make_model(crf_cfg.model_config(s.vocab.num_words(), s.vocab.num_labels()));
  train(*crf, s.train, s.dev, crf_cfg);
  const double crf_acc = evaluate(*crf, s.dev, 1, cfg.length_alpha).accuracy();
  report(seq_acc >= 0.95, "global dependency",
         fmt::format("seq2seq HGRU + hard-guided dev accuracy {:.4f} (>= 0.95); CRF over HGRU (reported only) {:.4f}; "
                     "{:.1f} s",
                     seq_acc, crf_acc, clock.seconds()));
}

void determinism() {
  TrainConfig cfg = TrainConfig::profile_defaults("synthetic");
  cfg.epochs = 5;
  cfg.dropout = 0.2;
  cfg.seed = 3;
  cfg.risk_epochs = 2;
  Split s = split_corpus(SyntheticKind::Local, 60, 3, cfg);
  auto run = [&] {
    Seq2SeqModel m(cfg.model_config(s.vocab.num_words(), s.vocab.num_labels()));
    std::ostringstream log, ckpt;
    train(m, s.train, s.dev, cfg, &log);
    finetune_risk(m, s.train, s.dev, cfg, &log);
    write_checkpoint(ckpt, m.params(), m.config().to_json());
    return std::make_pair(log.str(), ckpt.str());
  };
  const auto a = run();
  const auto b = run();
  const int lines = static_cast<int>(std::count(a.first.begin(), a.first.end(), '\n'));
  report(a.first == b.first && a.second == b.second && lines == 7, "determinism",
         fmt::format("two runs (seed 3, dropout 0.2, 5 token epochs + 2 RISK epochs): metrics logs {} ({} lines), "
                     "checkpoints {}",
                     a.first == b.first ? "bit-identical" : "DIFFER", lines,
                     a.second == b.second ? "bit-identical" : "DIFFER"));
}

void swda_harness() {
  const char* dir = std::getenv("DACT_SWDA_DIR");
  if (!dir) {
    std::cout << "SKIP  SwDA harness: optional; set DACT_SWDA_DIR to a directory with train.tsv, dev.tsv, test.tsv"
              << std::endl;
    return;
  }
  try {
    namespace fs = std::filesystem;
    TrainConfig cfg = TrainConfig::profile_defaults("swda");
    if (const char* epochs = std::getenv("DACT_SWDA_EPOCHS")) cfg.set("epochs", epochs);
    auto tr = read_corpus((fs::path(dir) / "train.tsv").string());
    auto dv = read_corpus((fs::path(dir) / "dev.tsv").string());
    auto te = read_corpus((fs::path(dir) / "test.tsv").string());
    Vocabulary vocab = build_vocab(tr, cfg.min_frequency);
    auto enc = [&](const std::vector<Conversation>& c) {
      return encode_windows(window_corpus(c, cfg.context), vocab, cfg.max_tokens);
    };
    auto trw = enc(tr), dvw = enc(dv), tew = enc(te);
    auto m = make_model(cfg.model_config(vocab.num_words(), vocab.num_labels()));
    train(*m, trw, dvw, cfg);
    const double acc = evaluate(*m, tew, cfg.beam_inf, cfg.length_alpha).accuracy();
    report(true, "SwDA harness", fmt::format("test last-label accuracy {:.4f} ({} epochs)", acc, cfg.epochs));
  } catch (const std::exception& e) {
    report(false, "SwDA harness", e.what());
  }
}

}  // namespace

int main() {
  Stopwatch total;
  gradient_fidelity();
  guided_attention();
  oracle_equivalence();
  risk_values();
  overfit_local();
  global_dependency();
  determinism();
  swda_harness();
  std::cout << fmt::format("{} criteria failed; total {:.1f} s", failures, total.seconds()) << std::endl;
  return failures == 0 ? 0 : 1;
}
