// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "dact/encoder.hpp"

namespace dact {

enum class AttentionMode { None, Additive, HardGuided, SoftGuided };

std::string to_string(AttentionMode m);
AttentionMode parse_attention_mode(const std::string& s);

inline bool has_attention_net(AttentionMode m) {
  return m == AttentionMode::Additive || m == AttentionMode::SoftGuided;
}

struct DecoderConfig {
  AttentionMode attention = AttentionMode::HardGuided;
  int num_labels = 0;
  int label_dim = 32;
  int hidden = 48;
  int attention_dim = 48;
  int encoder_dim = 0;   // 2 x sentence hidden
  double dropout = 0.0;  // applied to the GRU output before the projection
};

/// Per-window decoder inputs: encoder states and the cached W2 h^s_j term.
struct DecoderContext {
  EncoderOutput enc;
  Var keys;  // L x A, encoder states projected for additive scoring
  int length = 0;
};

struct StepOutput {
  Var logprobs;   // 1 x |Y|
  Var state;      // 1 x hidden
  Var attention;  // 1 x L; invalid when the mode is None
};

/// GRU decoder emitting one label distribution per window position. Step k
/// consumes [label embedding of y_{k-1} | context c_k] (just the label
/// embedding without attention) and projects the new state onto the labels.
class Decoder {
 public:
  Decoder() = default;
  Decoder(const DecoderConfig& cfg, ParamStore& store, std::mt19937_64& rng);

  const DecoderConfig& config() const { return cfg_; }
  int sos() const { return cfg_.num_labels; }

  DecoderContext prepare(Tape& tape, EncoderOutput enc) const;
  /// Initial state from H_i (through the bridge when sizes differ).
  Var initial_state(Tape& tape, const DecoderContext& ctx) const;

  /// Attention row alpha_{., k} for decode step k given the previous state.
  Var attention_weights(Tape& tape, const DecoderContext& ctx, Var prev_state, int step) const;
  /// c_k = sum_j alpha_{j,k} h^s_j.
  static Var context_vector(Var weights, Var encoder_states);

  StepOutput step(Tape& tape, const DecoderContext& ctx, int prev_label, Var prev_state, int step,
                  const ForwardOptions& opts = {}) const;

 private:
  Var bind_or_null(Tape& tape, Param* p) const;

  DecoderConfig cfg_;
  Param* label_emb_ = nullptr;  // (|Y| + 1) x label_dim, last row is SOS
  GruParams gru_;
  Param* bridge_w_ = nullptr;
  Param* bridge_b_ = nullptr;
  Param* out_w_ = nullptr;
  Param* out_b_ = nullptr;
  Param* att_w1_ = nullptr;  // hidden x A
  Param* att_w2_ = nullptr;  // encoder_dim x A
  Param* att_v_ = nullptr;   // A x 1
};

}  // namespace dact
