// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dact/decoder.hpp"
#include "dact/encoder.hpp"

namespace dact {

enum class ModelKind { Seq2Seq, Crf };

struct ModelConfig {
  ModelKind kind = ModelKind::Seq2Seq;
  EncoderConfig encoder;
  DecoderConfig decoder;  // encoder_dim is derived; unused by the CRF
  std::uint64_t init_seed = 1;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

struct Prediction {
  std::vector<int> labels;
  double score = 0.0;  // normalised beam score (seq2seq) or log p(path) (CRF)
};

/// Common surface for evaluation: anything that labels a whole window.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual Prediction predict(const EncodedWindow& window, int beam, double length_alpha) const = 0;
  virtual ParamStore& params() = 0;
  virtual const ParamStore& params() const = 0;
  virtual const ModelConfig& config() const = 0;
  /// Training objective for one window (token NLL for seq2seq, NLL for the CRF).
  virtual Var loss(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const = 0;
};

class Seq2SeqModel : public Tagger {
 public:
  explicit Seq2SeqModel(const ModelConfig& cfg);

  const ModelConfig& config() const override { return cfg_; }
  ParamStore& params() override { return store_; }
  const ParamStore& params() const override { return store_; }
  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  int num_labels() const { return cfg_.decoder.num_labels; }

  DecoderContext prepare(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts = {}) const;

  /// log p(labels | window) with the decoder conditioned on `labels` (teacher forcing).
  Var sequence_logprob(Tape& tape, const DecoderContext& ctx, std::span<const int> labels,
                       const ForwardOptions& opts = {}) const;
  Var sequence_logprob(Tape& tape, const EncodedWindow& window, std::span<const int> labels,
                       const ForwardOptions& opts = {}) const;

  /// -log p(gold | window) / |window|.
  Var token_nll(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts = {}) const;
  Var loss(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const override {
    return token_nll(tape, window, opts);
  }

  /// Per-step argmax decoding, ties to the lower label index.
  Prediction greedy(const EncodedWindow& window, double length_alpha = 0.65) const;
  Prediction predict(const EncodedWindow& window, int beam, double length_alpha) const override;

  /// Attention rows (one per decode step) of greedy decoding.
  std::vector<std::vector<double>> attention_matrix(const EncodedWindow& window) const;

 private:
  ModelConfig cfg_;
  ParamStore store_;
  Encoder encoder_;
  Decoder decoder_;
};

class CrfModel : public Tagger {
 public:
  explicit CrfModel(const ModelConfig& cfg);

  const ModelConfig& config() const override { return cfg_; }
  ParamStore& params() override { return store_; }
  const ParamStore& params() const override { return store_; }
  const Encoder& encoder() const { return encoder_; }
  int num_labels() const { return num_labels_; }

  /// phi(h^s_t) for every position, L x |Y|.
  Var unary_scores(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts = {}) const;
  Var nll(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts = {}) const;
  Var loss(Tape& tape, const EncodedWindow& window, const ForwardOptions& opts) const override {
    return nll(tape, window, opts);
  }

  /// Viterbi decoding; the beam arguments are ignored.
  Prediction predict(const EncodedWindow& window, int beam = 1, double length_alpha = 0.0) const override;

  const Tensor& transitions() const { return trans_->value; }
  const Tensor& start() const { return start_->value; }

 private:
  ModelConfig cfg_;
  int num_labels_ = 0;
  ParamStore store_;
  Encoder encoder_;
  Param* unary_w_ = nullptr;
  Param* unary_b_ = nullptr;
  Param* trans_ = nullptr;
  Param* start_ = nullptr;
};

std::unique_ptr<Tagger> make_model(const ModelConfig& cfg);

}  // namespace dact
