#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace gapforge {

// All character offsets in this project count Unicode scalar values, not
// bytes. Documents are stored as UTF-8; these helpers bridge the two views.
// Malformed byte sequences decode to U+FFFD (best effort, never throws).

std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::size_t utf8_length(std::string_view s);

// substring by codepoint offsets, [begin, end)
std::string utf8_slice(std::string_view s, std::size_t begin, std::size_t end);

bool is_space_cp(char32_t c);
bool is_letter_cp(char32_t c);
bool is_upper_cp(char32_t c);
bool is_digit_cp(char32_t c);

}  // namespace gapforge
