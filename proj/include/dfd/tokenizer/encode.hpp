#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dfd/tokenizer/vocabulary.hpp"

namespace dfd::tok {

inline constexpr std::size_t kMaxLengthCap = 128;

struct TokenSequence {
  std::vector<std::size_t> ids;
  std::vector<std::uint8_t> attention_mask;
  std::size_t true_length = 0;
};

// Word ids, truncated and right-padded to max_length. No framing tokens.
TokenSequence encode_rnn(std::string_view text, const Vocabulary& vocab, std::size_t max_length);

// [CLS] subwords [SEP], truncated to max_length - 2 subwords and padded.
// Throws ConfigError when max_length < 2.
TokenSequence encode_bert(std::string_view text, const Vocabulary& vocab, std::size_t max_length);

// Dispatches on the vocabulary kind.
TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_length);

// Unpadded ids for the whole text, no framing and no truncation.
std::vector<std::size_t> token_ids(std::string_view text, const Vocabulary& vocab);

// Longest encoding over the corpus (framing included), capped.
std::size_t max_length_for(const std::vector<std::string>& corpus, const Vocabulary& vocab,
                           std::size_t cap = kMaxLengthCap);

// Drops PAD/CLS/SEP, writes UNK as "[UNK]", rejoins subwords at end-of-word
// markers. Throws InputError for ids outside the vocabulary.
std::string decode(const std::vector<std::size_t>& ids, const Vocabulary& vocab);

std::vector<std::string> split_words(std::string_view text);

}  // namespace dfd::tok
