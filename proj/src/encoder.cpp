// SPDX-License-Identifier: Apache-2.0
#include "dact/encoder.hpp"

#include <utility>

namespace dact {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t site) {
  std::uint64_t x = seed ^ (site * 0x9E3779B97F4A7C15ull);
  x = (x ^ (x >> 33)) * 0xFF51AFD7ED558CCDull;
  x = (x ^ (x >> 33)) * 0xC4CEB9FE1A85EC53ull;
  return x ^ (x >> 33);
}

GruParams GruParams::create(ParamStore& store, const std::string& prefix, int input, int hidden,
                            std::mt19937_64& rng) {
  if (input < 1 || hidden < 1) throw Error("GRU '" + prefix + "': sizes must be positive");
  GruParams g;
  g.input = input;
  g.hidden = hidden;
  g.w = &store.add_weight(prefix + ".W", input, 3 * hidden, rng);
  g.u_rz = &store.add_weight(prefix + ".U_rz", hidden, 2 * hidden, rng);
  g.u_n = &store.add_weight(prefix + ".U_n", hidden, hidden, rng);
  g.b = &store.add(prefix + ".b", 1, 3 * hidden);
  return g;
}

Var bind(Tape& tape, Param* p) {
  return tape.grad_enabled() ? tape.param(*p) : tape.param(std::as_const(*p));
}

GruVars bind(Tape& tape, const GruParams& g) {
  return GruVars{bind(tape, g.w), bind(tape, g.u_rz), bind(tape, g.u_n), bind(tape, g.b), g.hidden};
}

Var gru_step(Var projected, Var h, const GruVars& g) {
  const int H = g.hidden;
  if (projected.rows() != 1 || projected.cols() != 3 * H) {
    throw Error("gru: projected input " + projected.value().shape_str() + " does not match hidden size " +
                std::to_string(H));
  }
  if (h.rows() != 1 || h.cols() != H) {
    throw Error("gru: state " + h.value().shape_str() + " does not match hidden size " + std::to_string(H));
  }
  Var rz = sigmoid(slice_cols(projected, 0, 2 * H) + matmul(h, g.u_rz));
  Var r = slice_cols(rz, 0, H);
  Var z = slice_cols(rz, H, H);
  Var n = tanh(slice_cols(projected, 2 * H, H) + matmul(r * h, g.u_n));
  // z . h + (1 - z) . n  ==  n + z . (h - n)
  return n + z * (h - n);
}

Var gru_cell(Var x, Var h, const GruVars& g) {
  if (x.rows() != 1 || x.cols() != g.w.rows()) {
    throw Error("gru: input " + x.value().shape_str() + " does not match input size " + std::to_string(g.w.rows()));
  }
  return gru_step(matmul(x, g.w) + g.b, h, g);
}

BiGruOutput bi_gru(Var inputs, const GruVars& fwd, const GruVars& bwd, const std::vector<bool>* fwd_reset,
                   const std::vector<bool>* bwd_reset) {
  Tape& tape = *inputs.tape;
  const int L = inputs.rows();
  if (L == 0) throw Error("bi_gru: empty input sequence");
  if (inputs.cols() != fwd.w.rows() || inputs.cols() != bwd.w.rows()) {
    throw Error("bi_gru: input width " + std::to_string(inputs.cols()) + " does not match GRU input size");
  }
  Var xf = matmul(inputs, fwd.w) + fwd.b;
  Var xb = matmul(inputs, bwd.w) + bwd.b;
  Var zf = tape.constant(Tensor(1, fwd.hidden));
  Var zb = tape.constant(Tensor(1, bwd.hidden));

  std::vector<Var> f(L), b(L);
  Var h = zf;
  for (int t = 0; t < L; ++t) {
    if (fwd_reset && (*fwd_reset)[t]) h = zf;
    h = gru_step(L == 1 ? xf : row(xf, t), h, fwd);
    f[t] = h;
  }
  h = zb;
  for (int t = L - 1; t >= 0; --t) {
    if (bwd_reset && (*bwd_reset)[t]) h = zb;
    h = gru_step(L == 1 ? xb : row(xb, t), h, bwd);
    b[t] = h;
  }
  BiGruOutput out;
  out.states.reserve(L);
  for (int t = 0; t < L; ++t) {
    const Var parts[2] = {f[t], b[t]};
    out.states.push_back(concat_cols(parts));
  }
  out.stacked = L == 1 ? out.states[0] : concat_rows(out.states);
  out.fwd_final = f[L - 1];
  out.bwd_final = b[0];
  return out;
}

Var embed_utterance_mean(Var token_embeddings) {
  if (token_embeddings.rows() == 0) throw Error("embed_utterance_mean: empty utterance");
  return token_embeddings.rows() == 1 ? token_embeddings : mean_rows(token_embeddings);
}

Var encode_utterance_hgru(Var token_embeddings, const GruVars& fwd, const GruVars& bwd) {
  if (token_embeddings.rows() == 0) throw Error("encode_utterance_hgru: empty utterance");
  BiGruOutput o = bi_gru(token_embeddings, fwd, bwd);
  const Var parts[2] = {o.fwd_final, o.bwd_final};
  return concat_cols(parts);
}

BiGruOutput persona_layer(Var utterance_embeddings, const std::vector<int>& speakers, const GruVars& fwd,
                          const GruVars& bwd) {
  const int L = utterance_embeddings.rows();
  if (static_cast<int>(speakers.size()) != L) {
    throw Error("persona_layer: " + std::to_string(speakers.size()) + " speakers for " + std::to_string(L) +
                " utterances");
  }
  std::vector<bool> fwd_reset(L, false), bwd_reset(L, false);
  for (int t = 1; t < L; ++t) fwd_reset[t] = speakers[t] != speakers[t - 1];
  for (int t = 0; t + 1 < L; ++t) bwd_reset[t] = speakers[t] != speakers[t + 1];
  return bi_gru(utterance_embeddings, fwd, bwd, &fwd_reset, &bwd_reset);
}

std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::VGRU: return "vgru";
    case EncoderKind::HGRU: return "hgru";
    case EncoderKind::PersoHGRU: return "persohgru";
  }
  return "?";
}

EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "vgru" || s == "VGRU_E" || s == "gru") return EncoderKind::VGRU;
  if (s == "hgru" || s == "HGRU") return EncoderKind::HGRU;
  if (s == "persohgru" || s == "PersoHGRU") return EncoderKind::PersoHGRU;
  throw Error("unknown encoder kind '" + s + "' (expected vgru, hgru or persohgru)");
}

int EncoderConfig::layers() const {
  if (sentence_layers > 0) return sentence_layers;
  return kind == EncoderKind::VGRU ? 2 : 1;
}

int EncoderConfig::utterance_dim() const {
  switch (kind) {
    case EncoderKind::VGRU: return emb_dim;
    case EncoderKind::HGRU: return 2 * word_hidden;
    case EncoderKind::PersoHGRU: return 2 * persona_hidden;
  }
  return 0;
}

Encoder::Encoder(const EncoderConfig& cfg, ParamStore& store, std::mt19937_64& rng) : cfg_(cfg) {
  if (cfg.vocab_size < 2) throw Error("Encoder: vocabulary must contain at least PAD and UNK");
  emb_ = &store.add("enc.emb", cfg.vocab_size, cfg.emb_dim);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (double& x : emb_->value.data) x = dist(rng);
  if (cfg.kind != EncoderKind::VGRU) {
    word_fwd_ = GruParams::create(store, "enc.word.fwd", cfg.emb_dim, cfg.word_hidden, rng);
    word_bwd_ = GruParams::create(store, "enc.word.bwd", cfg.emb_dim, cfg.word_hidden, rng);
  }
  if (cfg.kind == EncoderKind::PersoHGRU) {
    persona_fwd_ = GruParams::create(store, "enc.persona.fwd", 2 * cfg.word_hidden, cfg.persona_hidden, rng);
    persona_bwd_ = GruParams::create(store, "enc.persona.bwd", 2 * cfg.word_hidden, cfg.persona_hidden, rng);
  }
  int in = cfg.utterance_dim();
  for (int l = 0; l < cfg.layers(); ++l) {
    const std::string p = "enc.sent" + std::to_string(l);
    sent_fwd_.push_back(GruParams::create(store, p + ".fwd", in, cfg.sentence_hidden, rng));
    sent_bwd_.push_back(GruParams::create(store, p + ".bwd", in, cfg.sentence_hidden, rng));
    in = 2 * cfg.sentence_hidden;
  }
}

EncoderOutput Encoder::encode(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const {
  const int L = window.size();
  if (L < 1) throw Error("Encoder::encode: empty window");
  if (static_cast<int>(window.tokens.size()) != L) throw Error("Encoder::encode: token/label length mismatch");
  Var emb = bind(tape, emb_);

  std::vector<Var> utts;
  utts.reserve(L);
  if (cfg_.kind == EncoderKind::VGRU) {
    for (const auto& toks : window.tokens) {
      if (toks.empty()) throw Error("Encoder::encode: empty utterance");
      utts.push_back(embed_utterance_mean(lookup(emb, toks)));
    }
  } else {
    const GruVars wf = bind(tape, word_fwd_), wb = bind(tape, word_bwd_);
    for (const auto& toks : window.tokens) {
      if (toks.empty()) throw Error("Encoder::encode: empty utterance");
      utts.push_back(encode_utterance_hgru(lookup(emb, toks), wf, wb));
    }
  }
  Var u = L == 1 ? utts[0] : concat_rows(utts);
  if (cfg_.kind == EncoderKind::PersoHGRU) {
    u = persona_layer(u, window.speakers, bind(tape, persona_fwd_), bind(tape, persona_bwd_)).stacked;
  }
  if (opts.train && cfg_.dropout > 0.0) u = dropout(u, cfg_.dropout, mix_seed(opts.seed, 1));

  EncoderOutput out;
  out.utterances = u;
  Var layer_in = u;
  BiGruOutput o;
  for (std::size_t l = 0; l < sent_fwd_.size(); ++l) {
    o = bi_gru(layer_in, bind(tape, sent_fwd_[l]), bind(tape, sent_bwd_[l]));
    layer_in = o.stacked;
  }
  out.states = std::move(o.states);
  out.stacked = o.stacked;
  out.summary = out.states.back();
  return out;
}

}  // namespace dact
