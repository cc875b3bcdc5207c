#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace how2::util {

/// Splits on runs of Unicode White_Space; no empty tokens are produced.
std::vector<std::string> split_whitespace(std::string_view text);

std::string_view trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_icase(std::string_view text, std::string_view prefix);
std::string to_lower_ascii(std::string_view text);
std::vector<std::string> split_lines(std::string_view text);

// Decodes UTF-8 into code points; invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);

}  // namespace how2::util
