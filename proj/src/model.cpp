// SPDX-License-Identifier: Apache-2.0
#include "dact/model.hpp"

#include <random>

#include <nlohmann/json.hpp>

#include "dact/crf.hpp"
#include "dact/search.hpp"

namespace dact {

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == ModelKind::Seq2Seq ? "seq2seq" : "crf";
  j["init_seed"] = init_seed;
  j["encoder"] = {{"kind", to_string(encoder.kind)},         {"vocab_size", encoder.vocab_size},
                  {"emb_dim", encoder.emb_dim},               {"word_hidden", encoder.word_hidden},
                  {"persona_hidden", encoder.persona_hidden}, {"sentence_hidden", encoder.sentence_hidden},
                  {"sentence_layers", encoder.sentence_layers}, {"dropout", encoder.dropout}};
  j["decoder"] = {{"attention", to_string(decoder.attention)}, {"num_labels", decoder.num_labels},
                  {"label_dim", decoder.label_dim},             {"hidden", decoder.hidden},
                  {"attention_dim", decoder.attention_dim},     {"dropout", decoder.dropout}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "seq2seq") {
    c.kind = ModelKind::Seq2Seq;
  } else if (kind == "crf") {
    c.kind = ModelKind::Crf;
  } else {
    throw Error("model config: unknown kind '" + kind + "'");
  }
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  const auto& e = j.at("encoder");
  c.encoder.kind = parse_encoder_kind(e.at("kind").get<std::string>());
  c.encoder.vocab_size = e.at("vocab_size");
  c.encoder.emb_dim = e.at("emb_dim");
  c.encoder.word_hidden = e.at("word_hidden");
  c.encoder.persona_hidden = e.at("persona_hidden");
  c.encoder.sentence_hidden = e.at("sentence_hidden");
  c.encoder.sentence_layers = e.at("sentence_layers");
  c.encoder.dropout = e.at("dropout");
  const auto& d = j.at("decoder");
  c.decoder.attention = parse_attention_mode(d.at("attention").get<std::string>());
  c.decoder.num_labels = d.at("num_labels");
  c.decoder.label_dim = d.at("label_dim");
  c.decoder.hidden = d.at("hidden");
  c.decoder.attention_dim = d.at("attention_dim");
  c.decoder.dropout = d.at("dropout");
  return c;
}

namespace {

DecoderConfig with_encoder_dim(DecoderConfig d, const EncoderConfig& e) {
  d.encoder_dim = e.output_dim();
  return d;
}

}  // namespace

// Encoder parameters are registered first so that the two model kinds share a
// parameter layout prefix for a given encoder configuration.
Seq2SeqModel::Seq2SeqModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.kind = ModelKind::Seq2Seq;
  cfg_.decoder = with_encoder_dim(cfg.decoder, cfg.encoder);
  std::mt19937_64 rng(cfg.init_seed);
  encoder_ = Encoder(cfg_.encoder, store_, rng);
  decoder_ = Decoder(cfg_.decoder, store_, rng);
}

DecoderContext Seq2SeqModel::prepare(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const {
  return decoder_.prepare(tape, encoder_.encode(tape, window, opts));
}

Var Seq2SeqModel::sequence_logprob(Tape& tape, const DecoderContext& ctx, std::span<const int> labels,
                                   const ForwardOptions& opts) const {
  if (static_cast<int>(labels.size()) != ctx.length) {
    throw Error("sequence_logprob: " + std::to_string(labels.size()) + " labels for a window of " +
                std::to_string(ctx.length));
  }
  Var state = decoder_.initial_state(tape, ctx);
  int prev = decoder_.sos();
  Var total;
  for (int k = 0; k < ctx.length; ++k) {
    if (labels[k] < 0 || labels[k] >= num_labels()) throw Error("sequence_logprob: label out of range");
    StepOutput s = decoder_.step(tape, ctx, prev, state, k, opts);
    Var lp = pick(s.logprobs, 0, labels[k]);
    total = total.valid() ? total + lp : lp;
    state = s.state;
    prev = labels[k];
  }
  return total;
}

Var Seq2SeqModel::sequence_logprob(Tape& tape, const EncodedWindow& window, std::span<const int> labels,
                                   const ForwardOptions& opts) const {
  return sequence_logprob(tape, prepare(tape, window, opts), labels, opts);
}

Var Seq2SeqModel::token_nll(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const {
  return scale(sequence_logprob(tape, window, window.labels, opts), -1.0 / window.size());
}

Prediction Seq2SeqModel::greedy(const EncodedWindow& window, double length_alpha) const {
  Tape tape(false);
  DecoderContext ctx = prepare(tape, window);
  Var state = decoder_.initial_state(tape, ctx);
  int prev = decoder_.sos();
  Prediction out;
  double logprob = 0.0;
  for (int k = 0; k < ctx.length; ++k) {
    StepOutput s = decoder_.step(tape, ctx, prev, state, k);
    const Tensor& lp = s.logprobs.value();
    int best = 0;
    for (int y = 1; y < lp.cols; ++y)
      if (lp(0, y) > lp(0, best)) best = y;
    logprob += lp(0, best);
    out.labels.push_back(best);
    prev = best;
    state = s.state;
  }
  out.score = logprob / length_penalty(ctx.length, length_alpha);
  return out;
}

Prediction Seq2SeqModel::predict(const EncodedWindow& window, int beam, double length_alpha) const {
  auto hyps = beam_search(*this, window, BeamConfig{beam, length_alpha});
  return Prediction{hyps.front().labels, hyps.front().score};
}

std::vector<std::vector<double>> Seq2SeqModel::attention_matrix(const EncodedWindow& window) const {
  if (cfg_.decoder.attention == AttentionMode::None) throw Error("attention_matrix: model has no attention");
  Tape tape(false);
  DecoderContext ctx = prepare(tape, window);
  Var state = decoder_.initial_state(tape, ctx);
  int prev = decoder_.sos();
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < ctx.length; ++k) {
    StepOutput s = decoder_.step(tape, ctx, prev, state, k);
    rows.push_back(s.attention.value().data);
    const Tensor& lp = s.logprobs.value();
    int best = 0;
    for (int y = 1; y < lp.cols; ++y)
      if (lp(0, y) > lp(0, best)) best = y;
    prev = best;
    state = s.state;
  }
  return rows;
}

CrfModel::CrfModel(const ModelConfig& cfg) : cfg_(cfg), num_labels_(cfg.decoder.num_labels) {
  cfg_.kind = ModelKind::Crf;
  if (num_labels_ < 1) throw Error("CrfModel: label inventory is empty");
  std::mt19937_64 rng(cfg.init_seed);
  encoder_ = Encoder(cfg_.encoder, store_, rng);
  unary_w_ = &store_.add_weight("crf.unary.W", cfg_.encoder.output_dim(), num_labels_, rng);
  unary_b_ = &store_.add("crf.unary.b", 1, num_labels_);
  trans_ = &store_.add("crf.trans", num_labels_, num_labels_);
  start_ = &store_.add("crf.start", 1, num_labels_);
}

Var CrfModel::unary_scores(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const {
  EncoderOutput enc = encoder_.encode(tape, window, opts);
  return matmul(enc.stacked, bind(tape, unary_w_)) + bind(tape, unary_b_);
}

Var CrfModel::nll(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const {
  Var u = unary_scores(tape, window, opts);
  return crf_nll(u, bind(tape, trans_), bind(tape, start_), window.labels);
}

Prediction CrfModel::predict(const EncodedWindow& window, int, double) const {
  Tape tape(false);
  const Tensor& u = unary_scores(tape, window).value();
  Prediction p;
  p.labels = crf::viterbi(u, trans_->value, &start_->value);
  p.score = crf::path_score(u, trans_->value, &start_->value, p.labels) -
            crf::log_partition(u, trans_->value, &start_->value);
  return p;
}

std::unique_ptr<Tagger> make_model(const ModelConfig& cfg) {
  if (cfg.kind == ModelKind::Crf) return std::make_unique<CrfModel>(cfg);
  return std::make_unique<Seq2SeqModel>(cfg);
}

}  // namespace dact
