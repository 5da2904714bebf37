// SPDX-License-Identifier: Apache-2.0
//
// Dialogue data model and the canonical corpus format. Each non-blank line is
//   conversation_id <TAB> speaker <TAB> label <TAB> utterance text
// with the lines of one conversation contiguous.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "dact/params.hpp"
#include "dact/tensor.hpp"

namespace dact {

struct Utterance {
  std::string speaker;
  std::vector<std::string> tokens;
  std::string label;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
};

/// A context window: positions [first, first + size) of one conversation.
/// The last position is the one scored by the last-label metric.
struct Window {
  const Conversation* conversation = nullptr;
  int first = 0;
  int size = 0;

  const Utterance& at(int k) const { return conversation->utterances[first + k]; }
  int last_index() const { return first + size - 1; }
  std::vector<std::string> gold_labels() const;
};

std::vector<Conversation> parse_corpus(std::istream& in);
std::vector<Conversation> read_corpus(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<Conversation>& corpus);

/// Lowercases and splits on whitespace.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();

  int word_index(const std::string& word) const;
  const std::string& word(int index) const { return words_.at(index); }
  int num_words() const { return static_cast<int>(words_.size()); }

  /// Throws for labels outside the inventory.
  int label_index(const std::string& label) const;
  bool has_label(const std::string& label) const { return label_ids_.count(label) != 0; }
  const std::string& label(int index) const { return labels_.at(index); }
  int num_labels() const { return static_cast<int>(labels_.size()); }
  /// Start-of-sequence symbol for the decoder; one past the last real label.
  int sos_index() const { return num_labels(); }
  const std::vector<std::string>& labels() const { return labels_; }

  int min_frequency() const { return min_frequency_; }

  void add_word(const std::string& w);
  void add_label(const std::string& l);
  void set_min_frequency(int f) { min_frequency_ = f; }

  std::string to_json() const;
  static Vocabulary from_json(const std::string& text);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> word_ids_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> label_ids_;
  int min_frequency_ = 1;
};

/// Words are ordered by descending frequency, then lexicographically; labels
/// lexicographically.
Vocabulary build_vocab(const std::vector<Conversation>& corpus, int min_frequency);

/// One window per utterance, covering max(0, i-T+1)..i.
std::vector<Window> window_conversation(const Conversation& conversation, int context);
std::vector<Window> window_corpus(const std::vector<Conversation>& corpus, int context);

/// Embedding table with one row per vocabulary word. Rows for words found in
/// the stream are copied; the rest are drawn uniform in [-0.1, 0.1].
Tensor load_word_vectors(std::istream& in, const Vocabulary& vocab, int dim, std::uint64_t seed,
                         int* covered = nullptr);

/// Index form of a window, ready for the models.
struct EncodedWindow {
  std::vector<std::vector<int>> tokens;
  std::vector<int> labels;
  std::vector<int> speakers;  // equal ids iff equal speaker strings
  std::string conversation_id;
  int last_index = 0;

  int size() const { return static_cast<int>(labels.size()); }
};

EncodedWindow encode_window(const Window& window, const Vocabulary& vocab, int max_tokens);
std::vector<EncodedWindow> encode_windows(const std::vector<Window>& windows, const Vocabulary& vocab, int max_tokens);

}  // namespace dact
