// SPDX-License-Identifier: Apache-2.0
#include "dact/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dact {

std::vector<std::string> Window::gold_labels() const {
  std::vector<std::string> out;
  for (int k = 0; k < size; ++k) out.push_back(at(k).label);
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) { return std::tolower(c); });
    out.push_back(std::move(tok));
  }
  return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<Conversation> parse_corpus(std::istream& in) {
  std::vector<Conversation> out;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw Error("corpus line " + std::to_string(lineno) + ": expected 4 tab-separated fields, got " +
                  std::to_string(fields.size()));
    }
    Utterance u;
    u.speaker = fields[1];
    u.label = fields[2];
    u.tokens = tokenize(fields[3]);
    if (fields[0].empty()) throw Error("corpus line " + std::to_string(lineno) + ": empty conversation id");
    if (u.label.empty()) throw Error("corpus line " + std::to_string(lineno) + ": empty label");
    if (u.tokens.empty()) throw Error("corpus line " + std::to_string(lineno) + ": empty utterance text");
    if (out.empty() || out.back().id != fields[0]) {
      if (seen.count(fields[0])) {
        throw Error("corpus line " + std::to_string(lineno) + ": conversation '" + fields[0] + "' is not contiguous");
      }
      seen[fields[0]] = static_cast<int>(out.size());
      out.push_back(Conversation{fields[0], {}});
    }
    out.back().utterances.push_back(std::move(u));
  }
  return out;
}

std::vector<Conversation> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus '" + path + "'");
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<Conversation>& corpus) {
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) {
      out << conv.id << '\t' << u.speaker << '\t' << u.label << '\t';
      for (std::size_t i = 0; i < u.tokens.size(); ++i) out << (i ? " " : "") << u.tokens[i];
      out << '\n';
    }
  }
}

Vocabulary::Vocabulary() {
  add_word(kPadToken);
  add_word(kUnkToken);
}

void Vocabulary::add_word(const std::string& w) {
  if (word_ids_.count(w)) return;
  word_ids_.emplace(w, static_cast<int>(words_.size()));
  words_.push_back(w);
}

void Vocabulary::add_label(const std::string& l) {
  if (label_ids_.count(l)) return;
  label_ids_.emplace(l, static_cast<int>(labels_.size()));
  labels_.push_back(l);
}

int Vocabulary::word_index(const std::string& word) const {
  auto it = word_ids_.find(word);
  return it == word_ids_.end() ? kUnk : it->second;
}

int Vocabulary::label_index(const std::string& label) const {
  auto it = label_ids_.find(label);
  if (it == label_ids_.end()) throw Error("unknown label '" + label + "' (label inventory is closed)");
  return it->second;
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  j["min_frequency"] = min_frequency_;
  j["words"] = words_;
  j["labels"] = labels_;
  return j.dump();
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Vocabulary v;
  const auto words = j.at("words").get<std::vector<std::string>>();
  if (words.size() < 2 || words[kPad] != kPadToken || words[kUnk] != kUnkToken) {
    throw Error("vocabulary: reserved PAD/UNK entries missing");
  }
  for (const auto& w : words) v.add_word(w);
  for (const auto& l : j.at("labels").get<std::vector<std::string>>()) v.add_label(l);
  v.min_frequency_ = j.value("min_frequency", 1);
  return v;
}

Vocabulary build_vocab(const std::vector<Conversation>& corpus, int min_frequency) {
  if (min_frequency < 1) throw Error("build_vocab: min_frequency must be >= 1");
  std::map<std::string, long> counts;
  std::vector<std::string> labels;
  std::size_t utterances = 0;
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) {
      ++utterances;
      for (const auto& t : u.tokens) ++counts[t];
      labels.push_back(u.label);
    }
  }
  if (utterances == 0) throw Error("build_vocab: empty corpus");
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  v.set_min_frequency(min_frequency);
  for (const auto& [w, c] : ranked)
    if (c >= min_frequency) v.add_word(w);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (const auto& l : labels) v.add_label(l);
  return v;
}

std::vector<Window> window_conversation(const Conversation& conversation, int context) {
  if (context < 1) throw Error("window_conversation: context size must be >= 1");
  std::vector<Window> out;
  const int n = static_cast<int>(conversation.utterances.size());
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int first = std::max(0, i - context + 1);
    out.push_back(Window{&conversation, first, i - first + 1});
  }
  return out;
}

std::vector<Window> window_corpus(const std::vector<Conversation>& corpus, int context) {
  std::vector<Window> out;
  for (const auto& conv : corpus) {
    auto w = window_conversation(conv, context);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

Tensor load_word_vectors(std::istream& in, const Vocabulary& vocab, int dim, std::uint64_t seed, int* covered) {
  if (dim < 1) throw Error("load_word_vectors: dimension must be >= 1");
  Tensor table(vocab.num_words(), dim);
  std::vector<bool> filled(vocab.num_words(), false);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> values;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error("word vectors: non-numeric value for word '" + word + "'");
      }
    }
    // A leading "count dim" header line (fastText .vec) is skipped.
    if (values.size() == 1 && std::all_of(word.begin(), word.end(), ::isdigit)) continue;
    if (static_cast<int>(values.size()) != dim) {
      throw Error("word vectors: word '" + word + "' has " + std::to_string(values.size()) + " values, expected " +
                  std::to_string(dim));
    }
    const int idx = vocab.word_index(word);
    if (idx == Vocabulary::kUnk && word != Vocabulary::kUnkToken) continue;
    std::copy(values.begin(), values.end(), table.row_span(idx).begin());
    filled[idx] = true;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  int n_covered = 0;
  for (int r = 0; r < table.rows; ++r) {
    if (filled[r]) {
      ++n_covered;
      continue;
    }
    for (double& x : table.row_span(r)) x = dist(rng);
  }
  if (!table.all_finite()) throw Error("word vectors: non-finite value");
  if (covered) *covered = n_covered;
  return table;
}

EncodedWindow encode_window(const Window& window, const Vocabulary& vocab, int max_tokens) {
  if (max_tokens < 1) throw Error("encode_window: max_tokens must be >= 1");
  EncodedWindow out;
  out.conversation_id = window.conversation->id;
  out.last_index = window.last_index();
  std::vector<std::string> speakers;
  for (int k = 0; k < window.size; ++k) {
    const Utterance& u = window.at(k);
    std::vector<int> ids;
    const int n = std::min<int>(max_tokens, static_cast<int>(u.tokens.size()));
    for (int i = 0; i < n; ++i) ids.push_back(vocab.word_index(u.tokens[i]));
    out.tokens.push_back(std::move(ids));
    out.labels.push_back(vocab.label_index(u.label));
    auto it = std::find(speakers.begin(), speakers.end(), u.speaker);
    if (it == speakers.end()) {
      out.speakers.push_back(static_cast<int>(speakers.size()));
      speakers.push_back(u.speaker);
    } else {
      out.speakers.push_back(static_cast<int>(it - speakers.begin()));
    }
  }
  return out;
}

std::vector<EncodedWindow> encode_windows(const std::vector<Window>& windows, const Vocabulary& vocab, int max_tokens) {
  std::vector<EncodedWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(encode_window(w, vocab, max_tokens));
  return out;
}

}  // namespace dact
