// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dact/autodiff.hpp"
#include "dact/corpus.hpp"

namespace dact {

/// GRU weights under the row-vector convention:
///   [r z n]_x = x W + b            (W: in x 3H, b: 1 x 3H)
///   r = sigmoid(x W_r + h U_r + b_r),  z = sigmoid(x W_z + h U_z + b_z)
///   n = tanh(x W_n + (r . h) U_n + b_n)
///   h' = z . h + (1 - z) . n
struct GruParams {
  Param* w = nullptr;
  Param* u_rz = nullptr;  // H x 2H
  Param* u_n = nullptr;   // H x H
  Param* b = nullptr;
  int input = 0;
  int hidden = 0;

  static GruParams create(ParamStore& store, const std::string& prefix, int input, int hidden, std::mt19937_64& rng);
};

/// Binds a parameter to a tape: trainable on gradient tapes, constant otherwise.
Var bind(Tape& tape, Param* p);

struct GruVars {
  Var w, u_rz, u_n, b;
  int hidden = 0;
};
GruVars bind(Tape& tape, const GruParams& g);

/// One GRU update from input x (1 x in) and state h (1 x H).
Var gru_cell(Var x, Var h, const GruVars& g);
/// Same update with the input projection x W + b precomputed (1 x 3H).
Var gru_step(Var projected, Var h, const GruVars& g);

struct BiGruOutput {
  std::vector<Var> states;  // per position [fwd_t, bwd_t], 1 x 2H
  Var stacked;              // L x 2H
  Var fwd_final;            // forward state after the last position
  Var bwd_final;            // backward state after the first position
};

/// Bidirectional GRU over the rows of `inputs` (L x in), both directions from
/// zero. A set `fwd_reset[t]` zeroes the forward state before consuming t;
/// `bwd_reset[t]` does the same for the backward pass.
BiGruOutput bi_gru(Var inputs, const GruVars& fwd, const GruVars& bwd, const std::vector<bool>* fwd_reset = nullptr,
                   const std::vector<bool>* bwd_reset = nullptr);

/// Mean of token embedding rows (n x d) -> 1 x d.
Var embed_utterance_mean(Var token_embeddings);
/// [final forward, final backward] word-level states of one utterance.
Var encode_utterance_hgru(Var token_embeddings, const GruVars& fwd, const GruVars& bwd);
/// Speaker-aware bi-GRU over utterance embeddings (L x d): the forward state
/// restarts from zero where the speaker differs from the previous position,
/// the backward state where it differs from the next one.
BiGruOutput persona_layer(Var utterance_embeddings, const std::vector<int>& speakers, const GruVars& fwd,
                          const GruVars& bwd);

enum class EncoderKind { VGRU, HGRU, PersoHGRU };

std::string to_string(EncoderKind k);
EncoderKind parse_encoder_kind(const std::string& s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::HGRU;
  int vocab_size = 0;
  int emb_dim = 300;
  int word_hidden = 128;
  int persona_hidden = 128;
  int sentence_hidden = 128;
  int sentence_layers = 0;  // 0: 2 for VGRU, 1 for the hierarchical kinds
  double dropout = 0.0;     // applied to the utterance embeddings

  int layers() const;
  int utterance_dim() const;
  int output_dim() const { return 2 * sentence_hidden; }
};

struct ForwardOptions {
  bool train = false;
  std::uint64_t seed = 0;  // dropout mask seed
};

struct EncoderOutput {
  std::vector<Var> states;  // h^s per window position, 1 x 2H each
  Var stacked;              // L x 2H
  Var summary;              // H_i = states.back()
  Var utterances;           // L x d utterance embeddings fed to the sentence level
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& cfg, ParamStore& store, std::mt19937_64& rng);

  const EncoderConfig& config() const { return cfg_; }
  Param& embeddings() const { return *emb_; }

  EncoderOutput encode(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts = {}) const;

 private:
  EncoderConfig cfg_;
  Param* emb_ = nullptr;
  GruParams word_fwd_, word_bwd_;
  GruParams persona_fwd_, persona_bwd_;
  std::vector<GruParams> sent_fwd_, sent_bwd_;
};

/// Derives a sub-seed for one dropout site.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t site);

}  // namespace dact
