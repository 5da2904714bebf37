// SPDX-License-Identifier: Apache-2.0
#include "dact/decoder.hpp"

namespace dact {

std::string to_string(AttentionMode m) {
  switch (m) {
    case AttentionMode::None: return "none";
    case AttentionMode::Additive: return "additive";
    case AttentionMode::HardGuided: return "hard";
    case AttentionMode::SoftGuided: return "soft";
  }
  return "?";
}

AttentionMode parse_attention_mode(const std::string& s) {
  if (s == "none") return AttentionMode::None;
  if (s == "additive" || s == "att") return AttentionMode::Additive;
  if (s == "hard" || s == "hard-guided" || s == "strong") return AttentionMode::HardGuided;
  if (s == "soft" || s == "soft-guided" || s == "weak") return AttentionMode::SoftGuided;
  throw Error("unknown attention mode '" + s + "' (expected none, additive, hard or soft)");
}

Decoder::Decoder(const DecoderConfig& cfg, ParamStore& store, std::mt19937_64& rng) : cfg_(cfg) {
  if (cfg.num_labels < 1) throw Error("Decoder: label inventory is empty");
  if (cfg.encoder_dim < 1 || cfg.hidden < 1 || cfg.label_dim < 1) throw Error("Decoder: sizes must be positive");
  label_emb_ = &store.add_weight("dec.label_emb", cfg.num_labels + 1, cfg.label_dim, rng);
  const int input = cfg.label_dim + (cfg.attention == AttentionMode::None ? 0 : cfg.encoder_dim);
  gru_ = GruParams::create(store, "dec.gru", input, cfg.hidden, rng);
  if (cfg.encoder_dim != cfg.hidden) {
    bridge_w_ = &store.add_weight("dec.bridge.W", cfg.encoder_dim, cfg.hidden, rng);
    bridge_b_ = &store.add("dec.bridge.b", 1, cfg.hidden);
  }
  out_w_ = &store.add_weight("dec.out.W", cfg.hidden, cfg.num_labels, rng);
  out_b_ = &store.add("dec.out.b", 1, cfg.num_labels);
  if (has_attention_net(cfg.attention)) {
    if (cfg.attention_dim < 1) throw Error("Decoder: attention size must be positive");
    att_w1_ = &store.add_weight("dec.att.W1", cfg.hidden, cfg.attention_dim, rng);
    att_w2_ = &store.add_weight("dec.att.W2", cfg.encoder_dim, cfg.attention_dim, rng);
    att_v_ = &store.add_weight("dec.att.v", cfg.attention_dim, 1, rng);
  }
}

Var Decoder::bind_or_null(Tape& tape, Param* p) const { return p ? bind(tape, p) : Var{}; }

DecoderContext Decoder::prepare(Tape& tape, EncoderOutput enc) const {
  DecoderContext ctx;
  ctx.length = static_cast<int>(enc.states.size());
  if (ctx.length < 1) throw Error("Decoder: no encoder states");
  if (enc.stacked.cols() != cfg_.encoder_dim) {
    throw Error("Decoder: encoder states of width " + std::to_string(enc.stacked.cols()) + ", expected " +
                std::to_string(cfg_.encoder_dim));
  }
  if (has_attention_net(cfg_.attention)) ctx.keys = matmul(enc.stacked, bind(tape, att_w2_));
  ctx.enc = std::move(enc);
  return ctx;
}

Var Decoder::initial_state(Tape& tape, const DecoderContext& ctx) const {
  if (!bridge_w_) return ctx.enc.summary;
  return matmul(ctx.enc.summary, bind(tape, bridge_w_)) + bind(tape, bridge_b_);
}

Var Decoder::attention_weights(Tape& tape, const DecoderContext& ctx, Var prev_state, int step) const {
  if (step < 0 || step >= ctx.length) {
    throw Error("attention: step " + std::to_string(step) + " outside window of " + std::to_string(ctx.length));
  }
  switch (cfg_.attention) {
    case AttentionMode::None:
      throw Error("attention_weights: decoder has no attention");
    case AttentionMode::HardGuided: {
      Tensor onehot(1, ctx.length);
      onehot(0, step) = 1.0;
      return tape.constant(std::move(onehot));
    }
    case AttentionMode::Additive:
    case AttentionMode::SoftGuided: {
      // a(d, h_j) = v^T tanh(W1 d + W2 h_j), for all j at once.
      Var query = matmul(prev_state, bind(tape, att_w1_));
      Var scores = transpose(matmul(tanh(ctx.keys + query), bind(tape, att_v_)));
      if (cfg_.attention == AttentionMode::SoftGuided) {
        Tensor guide(1, ctx.length);
        guide(0, step) = 1.0;
        scores = scores + tape.constant(std::move(guide));
      }
      return softmax(scores);
    }
  }
  throw Error("attention_weights: bad mode");
}

Var Decoder::context_vector(Var weights, Var encoder_states) {
  if (weights.rows() != 1 || weights.cols() != encoder_states.rows()) {
    throw Error("context_vector: " + weights.value().shape_str() + " weights for " +
                std::to_string(encoder_states.rows()) + " encoder states");
  }
  return matmul(weights, encoder_states);
}

StepOutput Decoder::step(Tape& tape, const DecoderContext& ctx, int prev_label, Var prev_state, int step,
                         const ForwardOptions& opts) const {
  if (prev_label < 0 || prev_label > cfg_.num_labels) {
    throw Error("decode_step: label index " + std::to_string(prev_label) + " out of range");
  }
  const int ids[1] = {prev_label};
  Var input = lookup(bind(tape, label_emb_), ids);
  StepOutput out;
  if (cfg_.attention != AttentionMode::None) {
    out.attention = attention_weights(tape, ctx, prev_state, step);
    // A one-hot row selects h^s_k exactly.
    Var context = cfg_.attention == AttentionMode::HardGuided ? ctx.enc.states[step]
                                                              : context_vector(out.attention, ctx.enc.stacked);
    const Var parts[2] = {input, context};
    input = concat_cols(parts);
  }
  out.state = gru_cell(input, prev_state, bind(tape, gru_));
  Var h = out.state;
  if (opts.train && cfg_.dropout > 0.0) h = dropout(h, cfg_.dropout, mix_seed(opts.seed, 100 + step));
  out.logprobs = log_softmax(matmul(h, bind(tape, out_w_)) + bind(tape, out_b_));
  return out;
}

}  // namespace dact
