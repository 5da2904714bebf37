// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dact/corpus.hpp"

namespace dact {

enum class SyntheticKind { Local, Global };

SyntheticKind parse_synthetic_kind(const std::string& s);
std::string to_string(SyntheticKind kind);

/// Toy dialogue corpora with a known labelling rule. Labels are "da0".."da{Y-1}".
///
/// Local: each utterance holds one keyword. kw{j} (j < Y-1) means label j; the
/// keyword "amb" means label Y-1 after an even previous label (or at the
/// start) and label 0 after an odd one. "amb" never appears twice in a row.
///
/// Global: utterance i holds key{k_i}, k_i uniform over labels; its label is
/// k_{i-2} for i >= 2 and k_i for the first two utterances.
///
/// Every utterance also carries 1-5 filler words. Conversations have 4-8
/// utterances and two alternating-ish speakers.
std::vector<Conversation> make_synthetic_corpus(SyntheticKind kind, int size, std::uint64_t seed, int num_labels = 5);

/// The rule the generator applies, exposed for tests.
int local_rule(int previous_label, int keyword, int num_labels);
constexpr int kAmbiguousKeyword = -1;

}  // namespace dact
