#pragma once

// Small UTF-8 text helpers shared by the modules.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lightkg::text {

// Strips Unicode white space from both ends.
std::string_view trim(std::string_view s);
// Unicode full lowercase mapping (root locale).
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);

// Code-point level views, used where punctuation/white-space classes matter.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
bool is_space(char32_t c);
bool is_punct(char32_t c);

std::vector<std::string_view> split(std::string_view s, char sep);
bool starts_with_icase(std::string_view s, std::string_view prefix);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace lightkg::text
