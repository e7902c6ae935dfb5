#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dfd::tok {

enum class VocabKind { word, subword };

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kUnk = 1;
inline constexpr std::size_t kCls = 2;
inline constexpr std::size_t kSep = 3;
inline constexpr std::size_t kReservedCount = 4;

inline constexpr std::string_view kReservedTokens[kReservedCount] = {"[PAD]", "[UNK]", "[CLS]",
                                                                     "[SEP]"};

// Appended to the last symbol of every word on the subword path.
inline constexpr std::string_view kEndOfWord = "</w>";

struct Merge {
  std::string left;
  std::string right;
  bool operator==(const Merge&) const = default;
};

class Vocabulary {
 public:
  // `tokens` are the non-reserved entries; tokens[i] gets id i + 4.
  // Throws InputError on duplicates, empty tokens or reserved surface forms.
  Vocabulary(VocabKind kind, std::vector<std::string> tokens, std::vector<Merge> merges = {});

  VocabKind kind() const { return kind_; }
  std::size_t size() const { return kReservedCount + tokens_.size(); }
  const std::vector<Merge>& merges() const { return merges_; }
  // Position of (left, right) in the merge table.
  std::optional<std::size_t> merge_rank(std::string_view left, std::string_view right) const;

  std::optional<std::size_t> find(std::string_view token) const;
  std::size_t id_or_unk(std::string_view token) const;
  // Throws InputError when id >= size().
  const std::string& token(std::size_t id) const;

  // FNV-1a 64 over kind, tokens and merges; 16 lowercase hex digits.
  std::string hash() const;

  // Vocabulary file: the reserved header then one token per line. Subword
  // vocabularies also write "<path>.merges".
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return kind_ == other.kind_ && tokens_ == other.tokens_ && merges_ == other.merges_;
  }

 private:
  VocabKind kind_;
  std::vector<std::string> tokens_;
  std::vector<Merge> merges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> merge_rank_;
};

std::filesystem::path merges_path(const std::filesystem::path& vocab_path);

// Whitespace-split words with count >= min_freq, most frequent first, ties
// in codepoint order. max_size caps the non-reserved entries (0: no cap).
Vocabulary build_word_vocab(const std::vector<std::string>& corpus, std::size_t min_freq,
                            std::size_t max_size = 0);

}  // namespace dfd::tok
