#pragma once

// Minimal UTF-8 handling for the tokenizer. The class and case tables cover
// Latin, Greek, Cyrillic and Armenian case pairs and the common punctuation
// and symbol blocks; every other code point counts as a word character.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace topiccards::unicode {

/// Decodes one code point at `pos` and advances it. Returns nullopt (and
/// advances by one byte) on malformed input.
std::optional<char32_t> decode_next(std::string_view text, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

bool is_word_char(char32_t cp);

char32_t to_lower(char32_t cp);

}  // namespace topiccards::unicode
