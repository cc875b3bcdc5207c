#include "how2/corpus/numbered_list.hpp"

#include <cctype>
#include <optional>

#include "how2/util/text.hpp"

namespace how2::corpus {
namespace {

struct NumberedLine {
  long number;
  std::string text;
};

std::optional<NumberedLine> match_numbered(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  const std::size_t digits_start = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == digits_start || i - digits_start > 6) return std::nullopt;
  if (i >= line.size() || line[i] != '.') return std::nullopt;
  ++i;
  if (i >= line.size() || (line[i] != ' ' && line[i] != '\t')) return std::nullopt;
  const auto text = util::trim(line.substr(i));
  if (text.empty()) return std::nullopt;
  return NumberedLine{std::stol(std::string(line.substr(digits_start, i - 1 - digits_start))), std::string(text)};
}

}  // namespace

NumberedList final_numbered_list(std::string_view text) {
  if (const auto think = text.rfind("</think>"); think != std::string_view::npos) {
    text = text.substr(think + 8);
  }
  std::vector<NumberedLine> numbered;
  for (const auto& line : util::split_lines(text)) {
    if (auto m = match_numbered(line)) numbered.push_back(std::move(*m));
  }
  std::size_t start = numbered.size();
  for (std::size_t i = numbered.size(); i-- > 0;) {
    if (numbered[i].number == 1) {
      start = i;
      break;
    }
  }
  NumberedList out;
  if (start == numbered.size()) return out;
  out.consecutive = true;
  long expected = 1;
  for (std::size_t i = start; i < numbered.size(); ++i) {
    if (numbered[i].number != expected) {
      out.consecutive = false;
      break;
    }
    out.items.push_back(std::move(numbered[i].text));
    ++expected;
  }
  return out;
}

std::string render_numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back('\n');
    out += std::to_string(i + 1) + ". " + items[i];
  }
  return out;
}

}  // namespace how2::corpus
