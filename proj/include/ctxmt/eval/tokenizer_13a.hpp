#pragma once

#include <regex>
#include <string>
#include <string_view>

#include "ctxmt/text.hpp"

namespace ctxmt::eval {

namespace detail {

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace detail

// mteval-v13a tokenization: punctuation and symbols become separate tokens,
// periods and commas stay attached between digits, dashes split after digits.
inline std::string tokenize_13a(std::string_view input) {
  static const std::regex kSymbols(R"(([\{-\~\[-\` -\&\(-\+\:-\@\/]))");
  static const std::regex kPeriodCommaAfterNonDigit(R"(([^0-9])([\.,]))");
  static const std::regex kPeriodCommaBeforeNonDigit(R"(([\.,])([^0-9]))");
  static const std::regex kDashAfterDigit(R"(([0-9])(-))");

  std::string line(input);
  detail::replace_all(line, "<skipped>", "");
  detail::replace_all(line, "-\n", "");
  detail::replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    detail::replace_all(line, "&quot;", "\"");
    detail::replace_all(line, "&amp;", "&");
    detail::replace_all(line, "&lt;", "<");
    detail::replace_all(line, "&gt;", ">");
  }
  line = " " + line + " ";
  line = std::regex_replace(line, kSymbols, " $1 ");
  line = std::regex_replace(line, kPeriodCommaAfterNonDigit, "$1 $2 ");
  line = std::regex_replace(line, kPeriodCommaBeforeNonDigit, " $1 $2");
  line = std::regex_replace(line, kDashAfterDigit, "$1 $2 ");
  return text::normalize_whitespace(line);
}

}  // namespace ctxmt::eval
