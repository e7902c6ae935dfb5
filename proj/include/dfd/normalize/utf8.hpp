#pragma once

#include <string>
#include <string_view>

namespace dfd::text {

// Invalid or truncated sequences decode to U+FFFD.
std::u32string utf8_decode(std::string_view bytes);
std::string utf8_encode(std::u32string_view codepoints);

bool is_unicode_space(char32_t c);

}  // namespace dfd::text
