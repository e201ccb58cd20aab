#pragma once

#include <string>
#include <string_view>

namespace r4style {

// UTF-8 helpers. Invalid sequences decode as U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

bool is_punctuation(char32_t c);
bool is_space(char32_t c);
char32_t to_lower(char32_t c);

std::string lowercase(std::string_view s);

}  // namespace r4style
