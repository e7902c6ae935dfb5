#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dfd/tokenizer/vocabulary.hpp"

namespace dfd::tok {

// Initial symbols of a word: one per codepoint, the last one carrying the
// end-of-word marker.
std::vector<std::string> word_symbols(std::string_view word);

// Merges every non-overlapping occurrence of (left, right), scanning left
// to right.
void apply_merge(std::vector<std::string>& symbols, const Merge& merge);

// Greedy pair merging. Each round merges the pair with the highest
// frequency-weighted count, ties going to the smaller (left, right) in
// codepoint order. Stops early when no pair remains. The vocabulary holds
// the base alphabet (every codepoint seen, with and without the marker)
// followed by merged symbols in merge order.
Vocabulary train_bpe(const std::vector<std::string>& corpus, std::size_t num_merges);

// Segments one word with the vocabulary's merge table.
std::vector<std::string> segment_word(std::string_view word, const Vocabulary& vocab);

}  // namespace dfd::tok
