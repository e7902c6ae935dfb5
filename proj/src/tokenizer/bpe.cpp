#include "dfd/tokenizer/bpe.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "dfd/error.hpp"
#include "dfd/normalize/utf8.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::tok {
namespace {

// Training works on interned symbol ids; pairs are packed into one key.
struct SymbolTable {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> ids;

  std::uint32_t intern(const std::string& s) {
    auto [it, inserted] = ids.emplace(s, static_cast<std::uint32_t>(names.size()));
    if (inserted) names.push_back(s);
    return it->second;
  }
};

std::uint64_t pack(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct WordState {
  std::vector<std::uint32_t> symbols;
  std::size_t count;
};

void merge_ids(std::vector<std::uint32_t>& s, std::uint32_t left, std::uint32_t right,
               std::uint32_t merged) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
      s[out++] = merged;
      ++i;
    } else {
      s[out++] = s[i];
    }
  }
  s.resize(out);
}

}  // namespace

std::vector<std::string> word_symbols(std::string_view word) {
  const std::u32string cps = text::utf8_decode(word);
  std::vector<std::string> out;
  out.reserve(cps.size());
  for (char32_t c : cps) out.push_back(text::utf8_encode(std::u32string_view(&c, 1)));
  if (!out.empty()) out.back() += kEndOfWord;
  return out;
}

void apply_merge(std::vector<std::string>& symbols, const Merge& merge) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == merge.left && symbols[i + 1] == merge.right) {
      symbols[out++] = merge.left + merge.right;
      ++i;
    } else if (out != i) {
      symbols[out++] = std::move(symbols[i]);
    } else {
      ++out;
    }
  }
  symbols.resize(out);
}

Vocabulary train_bpe(const std::vector<std::string>& corpus, std::size_t num_merges) {
  if (corpus.empty()) throw InputError("train_bpe: empty corpus");
  std::map<std::string, std::size_t> word_counts;
  for (const auto& text : corpus) {
    for (auto& w : split_words(text)) ++word_counts[w];
  }

  std::set<std::string> alphabet;
  for (const auto& [w, c] : word_counts) {
    for (auto& s : word_symbols(w)) {
      std::string plain = s;
      if (plain.ends_with(kEndOfWord)) plain.resize(plain.size() - kEndOfWord.size());
      alphabet.insert(plain);
      alphabet.insert(plain + std::string(kEndOfWord));
    }
  }

  SymbolTable table;
  std::vector<std::string> tokens(alphabet.begin(), alphabet.end());
  for (const auto& t : tokens) table.intern(t);

  std::vector<WordState> words;
  words.reserve(word_counts.size());
  for (const auto& [w, c] : word_counts) {
    WordState ws{{}, c};
    for (const auto& s : word_symbols(w)) ws.symbols.push_back(table.ids.at(s));
    words.push_back(std::move(ws));
  }

  std::vector<Merge> merges;
  std::unordered_map<std::uint64_t, std::size_t> pair_counts;
  for (std::size_t round = 0; round < num_merges; ++round) {
    pair_counts.clear();
    for (const auto& ws : words) {
      for (std::size_t i = 0; i + 1 < ws.symbols.size(); ++i) {
        pair_counts[pack(ws.symbols[i], ws.symbols[i + 1])] += ws.count;
      }
    }
    if (pair_counts.empty()) break;

    std::uint64_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [key, count] : pair_counts) {
      bool better = count > best_count;
      if (!better && count == best_count) {
        const auto& bl = table.names[key >> 32];
        const auto& br = table.names[key & 0xffffffffu];
        const auto& cl = table.names[best >> 32];
        const auto& cr = table.names[best & 0xffffffffu];
        better = std::tie(bl, br) < std::tie(cl, cr);
      }
      if (better) {
        best = key;
        best_count = count;
      }
    }

    const auto left = static_cast<std::uint32_t>(best >> 32);
    const auto right = static_cast<std::uint32_t>(best & 0xffffffffu);
    Merge m{table.names[left], table.names[right]};
    const std::string joined = m.left + m.right;
    const bool fresh = !table.ids.contains(joined);
    const std::uint32_t merged = table.intern(joined);
    if (fresh) tokens.push_back(joined);
    for (auto& ws : words) merge_ids(ws.symbols, left, right, merged);
    merges.push_back(std::move(m));
  }
  return Vocabulary(VocabKind::subword, std::move(tokens), std::move(merges));
}

std::vector<std::string> segment_word(std::string_view word, const Vocabulary& vocab) {
  std::vector<std::string> symbols = word_symbols(word);
  // Applying the lowest-ranked applicable merge until none applies gives
  // the same result as replaying the table in order: a merge can only use
  // symbols produced by earlier merges.
  while (symbols.size() > 1) {
    std::size_t best_rank = vocab.merges().size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      if (auto r = vocab.merge_rank(symbols[i], symbols[i + 1]); r && *r < best_rank) best_rank = *r;
    }
    if (best_rank == vocab.merges().size()) break;
    apply_merge(symbols, vocab.merges()[best_rank]);
  }
  return symbols;
}

}  // namespace dfd::tok
