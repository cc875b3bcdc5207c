#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace how2::corpus {

// The numbered-list grammar shared by reply parsers, the generation parser
// and the step-format verifier. A numbered line is `<digits>. <text>` after
// optional leading whitespace. The final list starts at the last line
// numbered 1 (anything earlier, including a reasoning preamble, is ignored)
// and, when a `</think>` marker is present, only text after it is considered.
struct NumberedList {
  std::vector<std::string> items;  // texts of the consecutive run 1, 2, ..., k
  // True when every numbered line after the start continues the run, i.e.
  // there is no gap, repeat or restart after item k.
  bool consecutive = false;
};

NumberedList final_numbered_list(std::string_view text);

/// Renders "1. a\n2. b".
std::string render_numbered(const std::vector<std::string>& items);

}  // namespace how2::corpus
