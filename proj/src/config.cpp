// SPDX-License-Identifier: Apache-2.0
#include "dact/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

namespace dact {

namespace {

using Field = std::variant<std::string TrainConfig::*, double TrainConfig::*, int TrainConfig::*,
                           std::uint64_t TrainConfig::*>;

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"profile", &TrainConfig::profile},
      {"model", &TrainConfig::model},
      {"encoder", &TrainConfig::encoder},
      {"attention", &TrainConfig::attention},
      {"optimizer", &TrainConfig::optimizer},
      {"lr", &TrainConfig::lr},
      {"weight_decay", &TrainConfig::weight_decay},
      {"patience", &TrainConfig::patience},
      {"lr_factor", &TrainConfig::lr_factor},
      {"clip_norm", &TrainConfig::clip_norm},
      {"dropout", &TrainConfig::dropout},
      {"max_tokens", &TrainConfig::max_tokens},
      {"context", &TrainConfig::context},
      {"emb_dim", &TrainConfig::emb_dim},
      {"encoder_hidden", &TrainConfig::encoder_hidden},
      {"decoder_hidden", &TrainConfig::decoder_hidden},
      {"label_dim", &TrainConfig::label_dim},
      {"attention_dim", &TrainConfig::attention_dim},
      {"sentence_layers", &TrainConfig::sentence_layers},
      {"batch_size", &TrainConfig::batch_size},
      {"epochs", &TrainConfig::epochs},
      {"risk_epochs", &TrainConfig::risk_epochs},
      {"seed", &TrainConfig::seed},
      {"beam_train", &TrainConfig::beam_train},
      {"beam_inf", &TrainConfig::beam_inf},
      {"length_alpha", &TrainConfig::length_alpha},
      {"cost", &TrainConfig::cost},
      {"min_frequency", &TrainConfig::min_frequency},
      {"target_dev_accuracy", &TrainConfig::target_dev_accuracy},
      {"train", &TrainConfig::train_path},
      {"dev", &TrainConfig::dev_path},
      {"test", &TrainConfig::test_path},
      {"word_vectors", &TrainConfig::word_vectors},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return &f;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  T v{};
  ss >> v;
  if (ss.fail() || !ss.eof()) throw Error("config: key '" + key + "' expects a number, got '" + value + "'");
  return v;
}

std::string join_keys() {
  std::string out;
  for (const auto& k : TrainConfig::keys()) out += (out.empty() ? "" : ", ") + k;
  return out;
}

}  // namespace

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> ks = [] {
    std::vector<std::string> v;
    for (const auto& [k, f] : fields()) v.push_back(k);
    return v;
  }();
  return ks;
}

TrainConfig TrainConfig::profile_defaults(const std::string& profile) {
  TrainConfig c;
  c.profile = profile;
  if (profile == "swda") {
    c.optimizer = "adam";
    c.lr = 0.01;
    c.patience = 20;
    c.lr_factor = 0.5;
    c.clip_norm = 5.0;
    c.weight_decay = 1e-5;
    c.dropout = 0.2;
    c.max_tokens = 20;
    c.encoder_hidden = 128;
    c.decoder_hidden = 48;
    c.attention_dim = 48;
    c.beam_train = 2;
    c.beam_inf = 5;
  } else if (profile == "mrda") {
    c.optimizer = "adamw";
    c.lr = 0.001;
    c.patience = 15;
    c.lr_factor = 0.5;
    c.clip_norm = 5.0;
    c.weight_decay = 5e-5;
    c.dropout = 0.3;
    c.max_tokens = 30;
    c.encoder_hidden = 40;
    c.decoder_hidden = 400;
    c.attention_dim = 400;
    c.beam_train = 5;
    c.beam_inf = 1;
  } else if (profile == "synthetic") {
    // Desk-scale stand-in sized for the synthetic corpora.
    c.optimizer = "adam";
    c.lr = 0.01;
    c.patience = 20;
    c.weight_decay = 0.0;
    c.dropout = 0.0;
    c.max_tokens = 20;
    c.emb_dim = 16;
    c.encoder_hidden = 16;
    c.decoder_hidden = 16;
    c.label_dim = 8;
    c.attention_dim = 16;
    c.beam_train = 2;
    c.beam_inf = 1;
    c.epochs = 200;
  } else {
    throw Error("config: unknown profile '" + profile + "' (expected swda, mrda or synthetic)");
  }
  return c;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw Error("config: unknown key '" + key + "'; valid keys: " + join_keys());
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          this->*member = value;
        } else {
          this->*member = parse_number<T>(key, value);
        }
      },
      *f);
}

std::string TrainConfig::get(const std::string& key) const {
  const Field* f = find_field(key);
  if (!f) throw Error("config: unknown key '" + key + "'; valid keys: " + join_keys());
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cv_t<std::remove_reference_t<decltype(this->*member)>>;
        if constexpr (std::is_same_v<T, std::string>) {
          return this->*member;
        } else {
          std::ostringstream ss;
          ss << this->*member;
          return ss.str();
        }
      },
      *f);
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error("config: " + what);
  };
  require(model == "seq2seq" || model == "crf", "model must be seq2seq or crf");
  (void)parse_encoder_kind(encoder);
  (void)parse_attention_mode(attention);
  require(optimizer == "adam" || optimizer == "adamw", "optimizer must be adam or adamw");
  require(lr > 0.0, "lr must be > 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(patience >= 1, "patience must be >= 1");
  require(lr_factor > 0.0 && lr_factor < 1.0, "lr_factor must be in (0, 1)");
  require(clip_norm > 0.0, "clip_norm must be > 0");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(max_tokens >= 1, "max_tokens must be >= 1");
  require(context >= 1, "context must be >= 1");
  require(emb_dim >= 1 && encoder_hidden >= 1 && decoder_hidden >= 1 && label_dim >= 1 && attention_dim >= 1,
          "layer sizes must be >= 1");
  require(sentence_layers >= 0, "sentence_layers must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 0 && risk_epochs >= 0, "epoch counts must be >= 0");
  require(beam_train >= 1 && beam_inf >= 1, "beam widths must be >= 1");
  require(length_alpha >= 0.0, "length_alpha must be >= 0");
  (void)cost_kind();
  require(min_frequency >= 1, "min_frequency must be >= 1");
}

CostKind TrainConfig::cost_kind() const {
  if (cost == "zero_one") return CostKind::ZeroOne;
  if (cost == "hamming") return CostKind::Hamming;
  throw Error("config: cost must be zero_one or hamming");
}

ModelConfig TrainConfig::model_config(int vocab_size, int num_labels) const {
  validate();
  ModelConfig m;
  m.kind = model == "crf" ? ModelKind::Crf : ModelKind::Seq2Seq;
  m.init_seed = seed;
  m.encoder.kind = parse_encoder_kind(encoder);
  m.encoder.vocab_size = vocab_size;
  m.encoder.emb_dim = emb_dim;
  m.encoder.word_hidden = encoder_hidden;
  m.encoder.persona_hidden = encoder_hidden;
  m.encoder.sentence_hidden = encoder_hidden;
  m.encoder.sentence_layers = sentence_layers;
  m.encoder.dropout = dropout;
  m.decoder.attention = parse_attention_mode(attention);
  m.decoder.num_labels = num_labels;
  m.decoder.label_dim = label_dim;
  m.decoder.hidden = decoder_hidden;
  m.decoder.attention_dim = attention_dim;
  m.decoder.dropout = dropout;
  m.decoder.encoder_dim = m.encoder.output_dim();
  return m;
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("override '" + text + "' is not of the form key=value");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

IniFile parse_ini(const std::string& text) {
  IniFile ini;
  std::map<std::string, std::string>* current = &ini.top;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error("config line " + std::to_string(lineno) + ": unterminated section header");
      current = &ini.sections[trim(line.substr(1, line.size() - 2))];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    (*current)[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return ini;
}

TrainConfig resolve_config(const IniFile& file, const Overrides& overrides) {
  std::string profile = "swda";
  if (auto it = file.top.find("profile"); it != file.top.end()) profile = it->second;
  for (const auto& [k, v] : overrides)
    if (k == "profile") profile = v;
  TrainConfig c = TrainConfig::profile_defaults(profile);
  for (const auto& [k, v] : file.top)
    if (k != "profile") c.set(k, v);
  if (auto it = file.sections.find(profile); it != file.sections.end()) {
    for (const auto& [k, v] : it->second)
      if (k != "profile") c.set(k, v);
  }
  for (const auto& [k, v] : overrides)
    if (k != "profile") c.set(k, v);
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return resolve_config(parse_ini(ss.str()), overrides);
}

}  // namespace dact
