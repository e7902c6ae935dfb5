#include "dfd/tokenizer/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "dfd/error.hpp"
#include "dfd/hash.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::tok {
namespace {

constexpr std::string_view kMergesHeader = "#version: 1";

std::string pair_key(std::string_view left, std::string_view right) {
  std::string k;
  k.reserve(left.size() + right.size() + 1);
  k.append(left);
  k.push_back('\n');
  k.append(right);
  return k;
}


std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

Vocabulary::Vocabulary(VocabKind kind, std::vector<std::string> tokens, std::vector<Merge> merges)
    : kind_(kind), tokens_(std::move(tokens)), merges_(std::move(merges)) {
  if (kind_ == VocabKind::word && !merges_.empty()) {
    throw InputError("word vocabulary cannot carry merges");
  }
  for (std::size_t i = 0; i < kReservedCount; ++i) index_.emplace(kReservedTokens[i], i);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty()) throw InputError("empty vocabulary token");
    if (t.find_first_of(" \t\n\r") != std::string::npos) {
      throw InputError("vocabulary token contains whitespace: '" + t + "'");
    }
    if (!index_.emplace(t, kReservedCount + i).second) {
      throw InputError("duplicate vocabulary token: '" + t + "'");
    }
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& m = merges_[r];
    if (!index_.contains(m.left + m.right)) {
      throw InputError("merge result missing from vocabulary: '" + m.left + m.right + "'");
    }
    merge_rank_.emplace(pair_key(m.left, m.right), r);
  }
}

std::optional<std::size_t> Vocabulary::merge_rank(std::string_view left,
                                                  std::string_view right) const {
  auto it = merge_rank_.find(pair_key(left, right));
  if (it == merge_rank_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::id_or_unk(std::string_view token) const {
  auto id = find(token);
  // Reserved surface forms typed into text are ordinary unknown words.
  if (!id || *id < kReservedCount) return kUnk;
  return *id;
}

const std::string& Vocabulary::token(std::size_t id) const {
  static const std::string reserved[kReservedCount] = {
      std::string(kReservedTokens[0]), std::string(kReservedTokens[1]),
      std::string(kReservedTokens[2]), std::string(kReservedTokens[3])};
  if (id < kReservedCount) return reserved[id];
  if (id >= size()) {
    throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(size()));
  }
  return tokens_[id - kReservedCount];
}

std::string Vocabulary::hash() const {
  Fnv1a h;
  auto field = [&h](std::string_view s) {
    h.add(s);
    h.add("\n");
  };
  field(kind_ == VocabKind::word ? "word" : "subword");
  for (const auto& t : tokens_) field(t);
  field("#merges");
  for (const auto& m : merges_) field(m.left + " " + m.right);
  return h.hex();
}

std::filesystem::path merges_path(const std::filesystem::path& vocab_path) {
  return std::filesystem::path(vocab_path.string() + ".merges");
}

void Vocabulary::save(const std::filesystem::path& path) const {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    for (auto r : kReservedTokens) out << r << '\n';
    for (const auto& t : tokens_) out << t << '\n';
    if (!out) throw InputError("write failed: " + path.string());
  }
  const auto mpath = merges_path(path);
  if (kind_ == VocabKind::subword) {
    std::ofstream out(mpath, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + mpath.string());
    out << kMergesHeader << '\n';
    for (const auto& m : merges_) out << m.left << ' ' << m.right << '\n';
    if (!out) throw InputError("write failed: " + mpath.string());
  } else {
    std::filesystem::remove(mpath);
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.size() < kReservedCount) {
    throw IntegrityError(path.string() + ": missing reserved-token header");
  }
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    if (lines[i] != kReservedTokens[i]) {
      throw IntegrityError(path.string() + ": line " + std::to_string(i + 1) + " should be " +
                           std::string(kReservedTokens[i]));
    }
  }
  std::vector<std::string> tokens(lines.begin() + kReservedCount, lines.end());
  const auto mpath = merges_path(path);
  try {
    if (!std::filesystem::exists(mpath)) return Vocabulary(VocabKind::word, std::move(tokens));
    auto mlines = read_lines(mpath);
    if (mlines.empty() || mlines[0] != kMergesHeader) {
      throw IntegrityError(mpath.string() + ": missing version header");
    }
    std::vector<Merge> merges;
    for (std::size_t i = 1; i < mlines.size(); ++i) {
      const auto& l = mlines[i];
      const auto sp = l.find(' ');
      if (sp == std::string::npos || sp == 0 || sp + 1 == l.size() ||
          l.find(' ', sp + 1) != std::string::npos) {
        throw IntegrityError(mpath.string() + ": malformed merge on line " + std::to_string(i + 1));
      }
      merges.push_back({l.substr(0, sp), l.substr(sp + 1)});
    }
    return Vocabulary(VocabKind::subword, std::move(tokens), std::move(merges));
  } catch (const InputError& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
}

Vocabulary build_word_vocab(const std::vector<std::string>& corpus, std::size_t min_freq,
                            std::size_t max_size) {
  if (corpus.empty()) throw InputError("build_word_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    for (auto& w : split_words(text)) ++counts[w];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [w, c] : counts) {
    if (c < std::max<std::size_t>(min_freq, 1)) continue;
    bool reserved = false;
    for (auto r : kReservedTokens) reserved = reserved || w == r;
    if (!reserved) entries.emplace_back(w, c);
  }
  // std::map iteration is already in byte order, which for UTF-8 is
  // codepoint order; a stable sort by count keeps it for ties.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (max_size != 0 && entries.size() > max_size) entries.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(entries.size());
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return Vocabulary(VocabKind::word, std::move(tokens));
}

}  // namespace dfd::tok
