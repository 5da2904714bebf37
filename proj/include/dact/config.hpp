// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration. Files are key = value lines with optional
// [profile] sections:
//
//   profile = swda          # selects built-in defaults and the [swda] section
//   epochs = 30
//   [swda]
//   lr = 0.01
//
// Resolution order: built-in profile defaults, top-level keys, the selected
// profile's section, then command-line overrides.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dact/model.hpp"

namespace dact {

enum class CostKind { ZeroOne, Hamming };

struct TrainConfig {
  std::string profile = "swda";
  std::string model = "seq2seq";  // seq2seq | crf
  std::string encoder = "hgru";
  std::string attention = "hard";
  std::string optimizer = "adam";  // adam | adamw
  double lr = 0.01;
  double weight_decay = 1e-5;
  int patience = 20;
  double lr_factor = 0.5;
  double clip_norm = 5.0;
  double dropout = 0.2;
  int max_tokens = 20;
  int context = 5;
  int emb_dim = 300;
  int encoder_hidden = 128;
  int decoder_hidden = 48;
  int label_dim = 32;
  int attention_dim = 48;
  int sentence_layers = 0;
  int batch_size = 32;
  int epochs = 50;
  int risk_epochs = 10;
  std::uint64_t seed = 1;
  int beam_train = 2;
  int beam_inf = 5;
  double length_alpha = 0.65;
  std::string cost = "zero_one";  // zero_one | hamming
  int min_frequency = 1;
  double target_dev_accuracy = 0.0;  // > 0: stop once dev accuracy reaches it
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string word_vectors;

  /// Built-in defaults: "swda", "mrda" or "synthetic".
  static TrainConfig profile_defaults(const std::string& profile);
  static const std::vector<std::string>& keys();

  /// Throws with the list of valid keys for an unknown key.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// Re-checks every numeric range.
  void validate() const;

  CostKind cost_kind() const;
  /// Model architecture for a given vocabulary and label inventory.
  ModelConfig model_config(int vocab_size, int num_labels) const;
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Parses "key=value".
std::pair<std::string, std::string> parse_override(const std::string& text);

struct IniFile {
  std::map<std::string, std::string> top;
  std::map<std::string, std::map<std::string, std::string>> sections;
};
IniFile parse_ini(const std::string& text);

TrainConfig resolve_config(const IniFile& file, const Overrides& overrides);
TrainConfig load_config(const std::string& path, const Overrides& overrides);

}  // namespace dact
