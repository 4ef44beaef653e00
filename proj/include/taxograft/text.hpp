#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taxograft {

// Canonical form for every surface the pipeline compares: NFC, full Unicode
// case folding, trimmed, internal whitespace runs collapsed to one space.
// Total and idempotent; invalid UTF-8 sequences become U+FFFD.
std::string normalize_text(std::string_view raw);

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

// Splits on a single delimiter character, keeping empty fields.
std::vector<std::string_view> split(std::string_view line, char delim);

// Splits on runs of ASCII whitespace, dropping empty tokens.
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace taxograft
