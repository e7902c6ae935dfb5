#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dfd::text {

struct CodepointRange {
  char32_t lo;
  char32_t hi;  // inclusive
};

struct NormalizerConfig {
  // Core Arabic letters. Tatweel (U+0640) and Arabic-Indic digits are
  // deliberately absent, so the non-Arabic strip removes them.
  std::vector<CodepointRange> arabic_letters{{0x0621, 0x063A}, {0x0641, 0x064A}, {0x0671, 0x0671}};
  // Harakat, tanween, shadda, sukun and the other combining marks of the
  // Arabic block, plus the superscript alef.
  std::vector<CodepointRange> diacritics{{0x064B, 0x065F}, {0x0670, 0x0670}};
  std::string mention_placeholder = "USER";

  bool is_letter(char32_t c) const;
  bool is_diacritic(char32_t c) const;

  // Throws ConfigError when the letter and diacritic sets overlap or the
  // placeholder is empty or contains whitespace.
  void validate() const;

  // Key-value form used inside run configurations:
  //   {"arabic_letters": "0621-063A,0641-064A,0671",
  //    "diacritics": "064B-065F,0670", "mention_placeholder": "USER"}
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static NormalizerConfig from_json(const nlohmann::json& j);
};

// Private-use codepoint standing in for the mention placeholder while the
// non-Arabic strip runs. Never survives normalize().
inline constexpr char32_t kPlaceholderSentinel = 0xE000;

std::string format_ranges(const std::vector<CodepointRange>& ranges);
std::vector<CodepointRange> parse_ranges(std::string_view text);

// Deletes scheme://…, www.… and bare host/path shortlinks (t.co/…) up to
// the next whitespace.
std::string remove_urls(std::string_view text);

// Drops every '#' and turns underscores inside the hashtag into spaces.
std::string split_hashtags(std::string_view text);

// "@handle" at token start, where handle is [A-Za-z0-9_]+, becomes the
// placeholder.
std::string replace_mentions(std::string_view text, const NormalizerConfig& cfg);

std::string strip_diacritics(std::string_view text, const NormalizerConfig& cfg);

// Keeps Arabic letters and whitespace, restores sentinels to the
// placeholder, collapses whitespace runs to one space and trims.
std::string strip_non_arabic(std::string_view text, const NormalizerConfig& cfg);

// remove_urls → replace_mentions (escaped) → split_hashtags →
// strip_diacritics → strip_non_arabic. Idempotent.
std::string normalize(std::string_view text, const NormalizerConfig& cfg);

}  // namespace dfd::text
