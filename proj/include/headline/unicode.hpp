#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace headline::unicode {

/// Byte offset of the first malformed UTF-8 sequence, or nullopt when the
/// whole buffer is well-formed.
std::optional<std::size_t> find_invalid_utf8(std::string_view bytes);

inline bool is_valid_utf8(std::string_view bytes) {
  return !find_invalid_utf8(bytes).has_value();
}

/// Decodes well-formed UTF-8 into codepoints. Malformed bytes decode as
/// U+FFFD.
std::vector<char32_t> decode(std::string_view utf8);
std::string encode(const std::vector<char32_t>& codepoints);
void append_utf8(std::string& out, char32_t cp);

std::size_t codepoint_count(std::string_view utf8);

bool is_whitespace(char32_t cp);
/// Unicode general category P* (connector, dash, open, close, initial,
/// final, other punctuation).
bool is_punctuation(char32_t cp);
/// Pictographic emoji codepoints. ASCII characters carrying the Emoji
/// property (digits, '#', '*') are not counted.
bool is_emoji(char32_t cp);

std::string nfkc(std::string_view utf8);

/// Splits on runs of Unicode whitespace; empty pieces are dropped.
std::vector<std::string> split_whitespace(std::string_view utf8);

}  // namespace headline::unicode
