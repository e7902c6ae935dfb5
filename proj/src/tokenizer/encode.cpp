#include "dfd/tokenizer/encode.hpp"

#include <algorithm>

#include "dfd/error.hpp"
#include "dfd/tokenizer/bpe.hpp"

namespace dfd::tok {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

TokenSequence pad_to(std::vector<std::size_t> ids, std::size_t max_length) {
  TokenSequence seq;
  seq.true_length = ids.size();
  seq.ids = std::move(ids);
  seq.ids.resize(max_length, kPad);
  seq.attention_mask.assign(max_length, 0);
  std::fill_n(seq.attention_mask.begin(), seq.true_length, std::uint8_t{1});
  return seq;
}

void require_kind(const Vocabulary& vocab, VocabKind kind, const char* what) {
  if (vocab.kind() != kind) {
    throw UsageError(std::string(what) + ": vocabulary is " +
                     (vocab.kind() == VocabKind::word ? "word" : "subword") + "-level");
  }
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::vector<std::size_t> token_ids(std::string_view text, const Vocabulary& vocab) {
  std::vector<std::size_t> ids;
  for (const auto& w : split_words(text)) {
    if (vocab.kind() == VocabKind::word) {
      ids.push_back(vocab.id_or_unk(w));
    } else {
      for (const auto& piece : segment_word(w, vocab)) ids.push_back(vocab.id_or_unk(piece));
    }
  }
  return ids;
}

TokenSequence encode_rnn(std::string_view text, const Vocabulary& vocab, std::size_t max_length) {
  require_kind(vocab, VocabKind::word, "encode_rnn");
  auto ids = token_ids(text, vocab);
  if (ids.size() > max_length) ids.resize(max_length);
  return pad_to(std::move(ids), max_length);
}

TokenSequence encode_bert(std::string_view text, const Vocabulary& vocab, std::size_t max_length) {
  require_kind(vocab, VocabKind::subword, "encode_bert");
  if (max_length < 2) throw ConfigError("encode_bert: max_length must be at least 2");
  auto body = token_ids(text, vocab);
  if (body.size() > max_length - 2) body.resize(max_length - 2);
  std::vector<std::size_t> ids;
  ids.reserve(max_length);
  ids.push_back(kCls);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(kSep);
  return pad_to(std::move(ids), max_length);
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_length) {
  return vocab.kind() == VocabKind::word ? encode_rnn(text, vocab, max_length)
                                         : encode_bert(text, vocab, max_length);
}

std::size_t max_length_for(const std::vector<std::string>& corpus, const Vocabulary& vocab,
                           std::size_t cap) {
  const std::size_t framing = vocab.kind() == VocabKind::subword ? 2 : 0;
  std::size_t longest = framing;
  for (const auto& text : corpus) longest = std::max(longest, token_ids(text, vocab).size() + framing);
  return std::clamp<std::size_t>(longest, std::max<std::size_t>(framing, 1), cap);
}

std::string decode(const std::vector<std::size_t>& ids, const Vocabulary& vocab) {
  std::string out;
  const bool subword = vocab.kind() == VocabKind::subword;
  bool word_open = false;  // subword path: inside a word awaiting its marker
  auto separate = [&] {
    if (!out.empty() && !word_open) out.push_back(' ');
  };
  for (std::size_t id : ids) {
    const std::string& tok = vocab.token(id);
    if (id == kPad || id == kCls || id == kSep) continue;
    if (!subword) {
      separate();
      out += tok;
      continue;
    }
    separate();
    if (tok.ends_with(kEndOfWord) && id >= kReservedCount) {
      out.append(tok, 0, tok.size() - kEndOfWord.size());
      word_open = false;
    } else {
      out += tok;
      word_open = true;
    }
  }
  return out;
}

}  // namespace dfd::tok
