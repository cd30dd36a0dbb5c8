#pragma once

// Helpers for pulling JSON out of free-form model replies.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topiccards::detail {

/// Body of the first ``` fenced block, without the info string. An unclosed
/// fence yields everything after it.
std::optional<std::string_view> fenced_block(std::string_view text);

/// Every balanced `open`...`close` span, in order of its opening character.
/// Brackets inside JSON strings are ignored once a span has started.
std::vector<std::string_view> balanced_spans(std::string_view text, char open, char close);

/// At most `max_bytes` of `text`, cut on a UTF-8 boundary.
std::string excerpt(std::string_view text, std::size_t max_bytes = 200);

std::string_view trim(std::string_view text);

/// Lowercase ASCII alphanumerics only: "Source Titles" -> "sourcetitles".
std::string normalize_key(std::string_view key);

}  // namespace topiccards::detail
