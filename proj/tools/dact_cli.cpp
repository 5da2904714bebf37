// SPDX-License-Identifier: Apache-2.0
// dact: train, fine-tune, evaluate and inspect dialogue-act taggers.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dact/synthetic.hpp"
#include "dact/training.hpp"

using namespace dact;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
};

struct Paths {
  std::string train, dev, data, checkpoint, out = "model.ckpt", metrics = "metrics.tsv", report = "report.json",
                                            confusion = "confusion.tsv";
};

Overrides collect(const Common& c) {
  Overrides o;
  for (const auto& s : c.overrides) o.push_back(parse_override(s));
  if (c.seed >= 0) o.emplace_back("seed", std::to_string(c.seed));
  return o;
}

TrainConfig file_config(const Common& c) {
  if (c.config.empty()) throw Error("--config is required for this command");
  return load_config(c.config, collect(c));
}

std::ofstream open_out(const std::string& path) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string pick(const std::string& flag, const std::string& from_config, const char* what) {
  const std::string& p = flag.empty() ? from_config : flag;
  if (p.empty()) throw Error(std::string("no ") + what + " corpus given (flag or config key)");
  return p;
}

std::vector<EncodedWindow> load_windows(const std::string& path, const Vocabulary& vocab, const TrainConfig& cfg) {
  auto corpus = read_corpus(path);
  return encode_windows(window_corpus(corpus, cfg.context), vocab, cfg.max_tokens);
}

std::string metadata(const Tagger& m, const Vocabulary& vocab, const TrainConfig& cfg) {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(m.config().to_json());
  j["vocab"] = nlohmann::json::parse(vocab.to_json());
  nlohmann::json c;
  for (const auto& k : TrainConfig::keys()) c[k] = cfg.get(k);
  j["config"] = c;
  return j.dump();
}

struct Loaded {
  std::unique_ptr<Tagger> model;
  Vocabulary vocab;
  TrainConfig cfg;
};

// Rebuilds model, vocabulary and training config from a checkpoint; an
// optional config file and overrides are layered on top of the stored config.
Loaded load_model(const std::string& path, const Common& common) {
  if (path.empty()) throw Error("--checkpoint is required");
  const auto meta = nlohmann::json::parse(load_checkpoint_metadata(path));
  Loaded l;
  l.model = make_model(ModelConfig::from_json(meta.at("model").dump()));
  load_checkpoint(path, l.model->params());
  l.vocab = Vocabulary::from_json(meta.at("vocab").dump());
  const auto& stored = meta.at("config");
  l.cfg = TrainConfig::profile_defaults(stored.at("profile").get<std::string>());
  for (const auto& [k, v] : stored.items()) l.cfg.set(k, v.get<std::string>());
  if (!common.config.empty()) {
    std::ifstream in(common.config);
    if (!in) throw Error("cannot open config '" + common.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const IniFile ini = parse_ini(ss.str());
    for (const auto& [k, v] : ini.top) l.cfg.set(k, v);
    if (auto it = ini.sections.find(l.cfg.profile); it != ini.sections.end())
      for (const auto& [k, v] : it->second) l.cfg.set(k, v);
  }
  for (const auto& [k, v] : collect(common)) l.cfg.set(k, v);
  l.cfg.validate();
  return l;
}

Seq2SeqModel& as_seq2seq(Tagger& t, const char* command) {
  auto* s = dynamic_cast<Seq2SeqModel*>(&t);
  if (!s) throw Error(std::string(command) + " needs a seq2seq checkpoint");
  return *s;
}

int cmd_train(const Common& common, const Paths& p) {
  TrainConfig cfg = file_config(common);
  auto train_conv = read_corpus(pick(p.train, cfg.train_path, "training"));
  auto dev_conv = read_corpus(pick(p.dev, cfg.dev_path, "dev"));
  Vocabulary vocab = build_vocab(train_conv, cfg.min_frequency);
  auto train_w = encode_windows(window_corpus(train_conv, cfg.context), vocab, cfg.max_tokens);
  auto dev_w = encode_windows(window_corpus(dev_conv, cfg.context), vocab, cfg.max_tokens);
  auto model = make_model(cfg.model_config(vocab.num_words(), vocab.num_labels()));
  if (!cfg.word_vectors.empty()) {
    std::ifstream in(cfg.word_vectors);
    if (!in) throw Error("cannot open word vectors '" + cfg.word_vectors + "'");
    int covered = 0;
    model->params().get("enc.emb").value = load_word_vectors(in, vocab, cfg.emb_dim, cfg.seed, &covered);
    std::cerr << fmt::format("word vectors: {} of {} rows loaded\n", covered, vocab.num_words());
  }
  auto log = open_out(p.metrics);
  TrainResult r = train(*model, train_w, dev_w, cfg, &log);
  save_checkpoint(p.out, model->params(), metadata(*model, vocab, cfg));
  std::cerr << fmt::format("best dev accuracy {:.4f} at epoch {}; checkpoint {}\n", r.best_dev_accuracy, r.best_epoch,
                           p.out);
  return 0;
}

int cmd_finetune(const Common& common, const Paths& p) {
  Loaded l = load_model(p.checkpoint, common);
  Seq2SeqModel& m = as_seq2seq(*l.model, "finetune-risk");
  auto train_w = load_windows(pick(p.train, l.cfg.train_path, "training"), l.vocab, l.cfg);
  auto dev_w = load_windows(pick(p.dev, l.cfg.dev_path, "dev"), l.vocab, l.cfg);
  auto log = open_out(p.metrics);
  TrainResult r = finetune_risk(m, train_w, dev_w, l.cfg, &log);
  save_checkpoint(p.out, m.params(), metadata(m, l.vocab, l.cfg));
  std::cerr << fmt::format("best dev accuracy {:.4f}; checkpoint {}\n", r.best_dev_accuracy, p.out);
  return 0;
}

// The ten most frequent SwDA acts, shown when the inventory has all of them.
const std::vector<std::string> kSwdaView = {"sd", "b", "sv", "fc", "qw", "bk", "h", "qo", "no", "ft"};

int cmd_eval(const Common& common, const Paths& p) {
  Loaded l = load_model(p.checkpoint, common);
  auto windows = load_windows(pick(p.data, l.cfg.test_path, "evaluation"), l.vocab, l.cfg);
  EvalReport r = evaluate(*l.model, windows, l.cfg.beam_inf, l.cfg.length_alpha);
  r.seed = l.cfg.seed;

  nlohmann::json j;
  j["accuracy"] = r.accuracy();
  j["correct"] = r.correct;
  j["total"] = r.total;
  j["seed"] = r.seed;
  j["beam"] = l.cfg.beam_inf;
  j["labels"] = l.vocab.labels();
  j["confusion"] = r.confusion;
  open_out(p.report) << j.dump(2) << '\n';

  std::vector<int> shown;
  const bool swda = std::all_of(kSwdaView.begin(), kSwdaView.end(), [&](const auto& s) { return l.vocab.has_label(s); });
  if (swda) {
    for (const auto& s : kSwdaView) shown.push_back(l.vocab.label_index(s));
  } else {
    for (int i = 0; i < l.vocab.num_labels(); ++i) shown.push_back(i);
  }
  auto out = open_out(p.confusion);
  out << "gold\\pred";
  for (int c : shown) out << '\t' << l.vocab.label(c);
  out << '\n';
  for (int g : shown) {
    out << l.vocab.label(g);
    for (int c : shown) out << '\t' << r.confusion[g][c];
    out << '\n';
  }
  std::cout << fmt::format("accuracy {:.4f} ({}/{})\n", r.accuracy(), r.correct, r.total);
  return 0;
}

int cmd_predict(const Common& common, const Paths& p, bool greedy) {
  Loaded l = load_model(p.checkpoint, common);
  auto windows = load_windows(pick(p.data, l.cfg.test_path, "input"), l.vocab, l.cfg);
  std::vector<Prediction> preds;
  if (greedy) {
    const Seq2SeqModel& m = as_seq2seq(*l.model, "predict --greedy");
    for (const auto& w : windows) preds.push_back(m.greedy(w, l.cfg.length_alpha));
  } else {
    preds = predict_all(*l.model, windows, l.cfg.beam_inf, l.cfg.length_alpha);
  }
  auto out = open_out(p.out);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out << fmt::format("{}\t{}\t{}\t{}\t{:.17g}\n", windows[i].conversation_id, windows[i].last_index,
                       l.vocab.label(windows[i].labels.back()), l.vocab.label(preds[i].labels.back()), preds[i].score);
  }
  return 0;
}

int cmd_dump_attention(const Common& common, const Paths& p, int limit) {
  Loaded l = load_model(p.checkpoint, common);
  const Seq2SeqModel& m = as_seq2seq(*l.model, "dump-attention");
  auto windows = load_windows(pick(p.data, l.cfg.test_path, "input"), l.vocab, l.cfg);
  fs::create_directories(p.out);
  int written = 0;
  for (const auto& w : windows) {
    if (limit > 0 && written >= limit) break;
    auto rows = m.attention_matrix(w);
    auto out = open_out((fs::path(p.out) / fmt::format("{}_{}.csv", w.conversation_id, w.last_index)).string());
    for (const auto& row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << fmt::format("{:.17g}", row[j]);
      out << '\n';
    }
    ++written;
  }
  std::cerr << fmt::format("{} attention matrices written to {}\n", written, p.out);
  return 0;
}

int cmd_gen(const std::string& kind, int size, std::uint64_t seed, int labels, const std::string& out_path) {
  auto corpus = make_synthetic_corpus(parse_synthetic_kind(kind), size, seed, labels);
  auto out = open_out(out_path);
  write_corpus(out, corpus);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue-act tagging with seq2seq and CRF models"};
  app.require_subcommand(1);
  Common common;
  Paths paths;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Config file (key = value, [profile] sections)");
    sub->add_option("-s,--set", common.overrides, "Override a config key: key=value (repeatable)");
    sub->add_option("--seed", common.seed, "Random seed (overrides the config)");
  };

  auto* train = app.add_subcommand("train", "Token-level training");
  add_common(train);
  train->add_option("--train", paths.train, "Training corpus TSV (default: config key train)");
  train->add_option("--dev", paths.dev, "Dev corpus TSV (default: config key dev)");
  train->add_option("-o,--out", paths.out, "Checkpoint to write");
  train->add_option("--metrics", paths.metrics, "Per-epoch metrics TSV");

  auto* ft = app.add_subcommand("finetune-risk", "Sequence-level RISK fine-tuning of a checkpoint");
  add_common(ft);
  ft->add_option("--checkpoint", paths.checkpoint, "Token-level checkpoint")->required();
  ft->add_option("--train", paths.train, "Training corpus TSV");
  ft->add_option("--dev", paths.dev, "Dev corpus TSV");
  ft->add_option("-o,--out", paths.out, "Checkpoint to write");
  ft->add_option("--metrics", paths.metrics, "Per-epoch metrics TSV");

  auto* ev = app.add_subcommand("eval", "Last-label accuracy and confusion matrix");
  add_common(ev);
  ev->add_option("--checkpoint", paths.checkpoint, "Model checkpoint")->required();
  ev->add_option("--data", paths.data, "Corpus TSV (default: config key test)");
  ev->add_option("--report", paths.report, "JSON report to write");
  ev->add_option("--confusion", paths.confusion, "Confusion matrix TSV to write");

  bool greedy = false;
  auto* pr = app.add_subcommand("predict", "Per-utterance predictions as TSV");
  add_common(pr);
  pr->add_option("--checkpoint", paths.checkpoint, "Model checkpoint")->required();
  pr->add_option("--data", paths.data, "Corpus TSV (default: config key test)");
  auto* pr_out = pr->add_option("-o,--out", paths.out, "Prediction TSV to write");
  pr->add_flag("--greedy", greedy, "Greedy decoding instead of beam search");

  int limit = 0;
  auto* da = app.add_subcommand("dump-attention", "One attention-matrix CSV per window");
  add_common(da);
  da->add_option("--checkpoint", paths.checkpoint, "Model checkpoint")->required();
  da->add_option("--data", paths.data, "Corpus TSV (default: config key test)");
  auto* da_out = da->add_option("-o,--out", paths.out, "Output directory");
  da->add_option("--limit", limit, "Stop after this many windows (0: all)");

  std::string kind = "local", gen_out = "synthetic.tsv";
  int size = 500, labels = 5;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic corpus TSV");
  gen->add_option("--kind", kind, "local or global")->check(CLI::IsMember({"local", "global"}));
  gen->add_option("--size", size, "Number of conversations");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--labels", labels, "Number of dialogue-act labels");
  gen->add_option("-o,--out", gen_out, "Corpus TSV to write");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(common, paths);
    if (*ft) return cmd_finetune(common, paths);
    if (*ev) return cmd_eval(common, paths);
    if (*pr) {
      if (pr_out->count() == 0) paths.out = "predictions.tsv";
      return cmd_predict(common, paths, greedy);
    }
    if (*da) {
      if (da_out->count() == 0) paths.out = "attention";
      return cmd_dump_attention(common, paths, limit);
    }
    if (*gen) return cmd_gen(kind, size, gen_seed, labels, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
