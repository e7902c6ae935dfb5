#include "dfd/normalize/normalizer.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "dfd/error.hpp"
#include "dfd/normalize/utf8.hpp"

namespace dfd::text {
namespace {

bool in_ranges(const std::vector<CodepointRange>& ranges, char32_t c) {
  for (const auto& r : ranges) {
    if (c >= r.lo && c <= r.hi) return true;
  }
  return false;
}

bool is_ascii_alpha(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }
bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_ascii_alnum(char32_t c) { return is_ascii_alpha(c) || is_ascii_digit(c); }
bool is_handle_char(char32_t c) { return is_ascii_alnum(c) || c == U'_'; }
bool is_scheme_char(char32_t c) { return is_ascii_alnum(c) || c == U'+' || c == U'.' || c == U'-'; }
char32_t ascii_lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

std::size_t token_end(const std::u32string& s, std::size_t i) {
  while (i < s.size() && !is_unicode_space(s[i])) ++i;
  return i;
}

// host.tld/… with at least one dot and an alphabetic final label of 2+.
bool is_bare_shortlink(const std::u32string& s, std::size_t begin, std::size_t end) {
  std::size_t slash = begin;
  while (slash < end && s[slash] != U'/') ++slash;
  if (slash == end || slash == begin) return false;
  std::size_t last_dot = std::u32string::npos;
  for (std::size_t i = begin; i < slash; ++i) {
    const char32_t c = s[i];
    if (c == U'.') {
      if (i == begin || s[i - 1] == U'.') return false;
      last_dot = i;
    } else if (!is_ascii_alnum(c) && c != U'-') {
      return false;
    }
  }
  if (last_dot == std::u32string::npos) return false;
  if (slash - last_dot - 1 < 2) return false;
  for (std::size_t i = last_dot + 1; i < slash; ++i) {
    if (!is_ascii_alpha(s[i])) return false;
  }
  return true;
}

bool starts_with_www(const std::u32string& s, std::size_t begin, std::size_t end) {
  static constexpr char32_t kWww[] = U"www.";
  if (end - begin < 4) return false;
  for (std::size_t k = 0; k < 4; ++k) {
    if (ascii_lower(s[begin + k]) != kWww[k]) return false;
  }
  return true;
}

// Start of a "scheme://" inside [begin, end), or npos.
std::size_t find_scheme(const std::u32string& s, std::size_t begin, std::size_t end) {
  for (std::size_t p = begin; p + 3 <= end; ++p) {
    if (s[p] != U':' || s[p + 1] != U'/' || s[p + 2] != U'/') continue;
    std::size_t start = p;
    while (start > begin && is_scheme_char(s[start - 1])) --start;
    while (start < p && !is_ascii_alpha(s[start])) ++start;
    if (start < p) return start;
  }
  return std::u32string::npos;
}

std::u32string remove_urls_u32(const std::u32string& s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_unicode_space(s[i])) {
      out.push_back(s[i++]);
      continue;
    }
    const std::size_t end = token_end(s, i);
    if (starts_with_www(s, i, end) || is_bare_shortlink(s, i, end)) {
      i = end;
      continue;
    }
    const std::size_t scheme = find_scheme(s, i, end);
    const std::size_t keep = scheme == std::u32string::npos ? end : scheme;
    out.append(s, i, keep - i);
    i = end;
  }
  return out;
}

std::u32string split_hashtags_u32(const std::u32string& s) {
  std::u32string out;
  out.reserve(s.size());
  bool in_tag = false;
  for (char32_t c : s) {
    if (is_unicode_space(c)) {
      in_tag = false;
      out.push_back(c);
    } else if (c == U'#') {
      in_tag = true;
    } else if (in_tag && c == U'_') {
      out.push_back(U' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// Writes `replacement` for each token-initial @handle. When escaping, the
// replacement is padded with spaces so it always stands as its own token.
std::u32string replace_mentions_u32(const std::u32string& s, const std::u32string& replacement,
                                    bool pad) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool token_start = i == 0 || is_unicode_space(s[i - 1]);
    if (token_start && s[i] == U'@' && i + 1 < s.size() && is_handle_char(s[i + 1])) {
      std::size_t j = i + 1;
      while (j < s.size() && is_handle_char(s[j])) ++j;
      if (pad) out.push_back(U' ');
      out += replacement;
      if (pad) out.push_back(U' ');
      i = j;
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

// Whole-token occurrences of the placeholder become sentinels so text that
// already went through normalize() keeps them.
std::u32string escape_placeholder_tokens(const std::u32string& s, const std::u32string& placeholder) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_unicode_space(s[i])) {
      out.push_back(s[i++]);
      continue;
    }
    const std::size_t end = token_end(s, i);
    if (s.compare(i, end - i, placeholder) == 0) {
      out.push_back(kPlaceholderSentinel);
    } else {
      out.append(s, i, end - i);
    }
    i = end;
  }
  return out;
}

std::u32string strip_diacritics_u32(const std::u32string& s, const NormalizerConfig& cfg) {
  std::u32string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (!cfg.is_diacritic(c)) out.push_back(c);
  }
  return out;
}

std::u32string strip_non_arabic_u32(const std::u32string& s, const NormalizerConfig& cfg) {
  const std::u32string placeholder = utf8_decode(cfg.mention_placeholder);
  std::u32string kept;
  kept.reserve(s.size());
  for (char32_t c : s) {
    if (cfg.is_letter(c)) {
      kept.push_back(c);
    } else if (c == kPlaceholderSentinel) {
      kept.push_back(U' ');
      kept += placeholder;
      kept.push_back(U' ');
    } else if (is_unicode_space(c)) {
      kept.push_back(U' ');
    }
  }
  std::u32string out;
  out.reserve(kept.size());
  for (char32_t c : kept) {
    if (c == U' ' && (out.empty() || out.back() == U' ')) continue;
    out.push_back(c);
  }
  if (!out.empty() && out.back() == U' ') out.pop_back();
  return out;
}

}  // namespace

bool NormalizerConfig::is_letter(char32_t c) const { return in_ranges(arabic_letters, c); }

bool NormalizerConfig::is_diacritic(char32_t c) const { return in_ranges(diacritics, c); }

void NormalizerConfig::validate() const {
  for (const auto& r : arabic_letters) {
    if (r.lo > r.hi) throw ConfigError("normalizer: inverted letter range");
    for (char32_t c = r.lo; c <= r.hi; ++c) {
      if (is_diacritic(c)) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(c));
        throw ConfigError(std::string("normalizer: ") + buf + " is both a letter and a diacritic");
      }
    }
  }
  for (const auto& r : diacritics) {
    if (r.lo > r.hi) throw ConfigError("normalizer: inverted diacritic range");
  }
  const std::u32string p = utf8_decode(mention_placeholder);
  if (p.empty()) throw ConfigError("normalizer: mention placeholder must not be empty");
  for (char32_t c : p) {
    if (is_unicode_space(c) || c == kPlaceholderSentinel) {
      throw ConfigError("normalizer: mention placeholder must be a single token");
    }
  }
}

std::string format_ranges(const std::vector<CodepointRange>& ranges) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (i) out.push_back(',');
    if (ranges[i].lo == ranges[i].hi) {
      std::snprintf(buf, sizeof buf, "%04X", static_cast<unsigned>(ranges[i].lo));
    } else {
      std::snprintf(buf, sizeof buf, "%04X-%04X", static_cast<unsigned>(ranges[i].lo),
                    static_cast<unsigned>(ranges[i].hi));
    }
    out += buf;
  }
  return out;
}

std::vector<CodepointRange> parse_ranges(std::string_view text) {
  std::vector<CodepointRange> out;
  auto parse_hex = [&](std::string_view h) -> char32_t {
    if (h.empty() || h.size() > 6) throw ConfigError("bad codepoint '" + std::string(h) + "'");
    char32_t v = 0;
    for (char c : h) {
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<char32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<char32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<char32_t>(c - 'A' + 10);
      else throw ConfigError("bad codepoint '" + std::string(h) + "'");
    }
    return v;
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const std::size_t dash = item.find('-');
      if (dash == std::string_view::npos) {
        const char32_t c = parse_hex(item);
        out.push_back({c, c});
      } else {
        out.push_back({parse_hex(item.substr(0, dash)), parse_hex(item.substr(dash + 1))});
      }
    }
    pos = comma + 1;
  }
  return out;
}

nlohmann::json NormalizerConfig::to_json() const {
  return nlohmann::json{{"arabic_letters", format_ranges(arabic_letters)},
                        {"diacritics", format_ranges(diacritics)},
                        {"mention_placeholder", mention_placeholder}};
}

NormalizerConfig NormalizerConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("normalizer section must be an object");
  NormalizerConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw ConfigError("normalizer." + key + " must be a string");
    const std::string v = value.get<std::string>();
    if (key == "arabic_letters") cfg.arabic_letters = parse_ranges(v);
    else if (key == "diacritics") cfg.diacritics = parse_ranges(v);
    else if (key == "mention_placeholder") cfg.mention_placeholder = v;
    else throw ConfigError("unknown key normalizer." + key);
  }
  cfg.validate();
  return cfg;
}

std::string remove_urls(std::string_view text) {
  return utf8_encode(remove_urls_u32(utf8_decode(text)));
}

std::string split_hashtags(std::string_view text) {
  return utf8_encode(split_hashtags_u32(utf8_decode(text)));
}

std::string replace_mentions(std::string_view text, const NormalizerConfig& cfg) {
  return utf8_encode(replace_mentions_u32(utf8_decode(text), utf8_decode(cfg.mention_placeholder), false));
}

std::string strip_diacritics(std::string_view text, const NormalizerConfig& cfg) {
  return utf8_encode(strip_diacritics_u32(utf8_decode(text), cfg));
}

std::string strip_non_arabic(std::string_view text, const NormalizerConfig& cfg) {
  return utf8_encode(strip_non_arabic_u32(utf8_decode(text), cfg));
}

std::string normalize(std::string_view text, const NormalizerConfig& cfg) {
  std::u32string s = utf8_decode(text);
  std::erase(s, kPlaceholderSentinel);
  s = remove_urls_u32(s);
  s = escape_placeholder_tokens(s, utf8_decode(cfg.mention_placeholder));
  s = replace_mentions_u32(s, std::u32string(1, kPlaceholderSentinel), true);
  s = split_hashtags_u32(s);
  s = strip_diacritics_u32(s, cfg);
  s = strip_non_arabic_u32(s, cfg);
  return utf8_encode(s);
}

}  // namespace dfd::text
