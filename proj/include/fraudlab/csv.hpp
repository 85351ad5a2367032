#pragma once

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fraudlab/errors.hpp"

// Minimal CSV helpers. None of the lab's files quote fields: tokens are
// validated to be free of separators before they are written.
namespace fraudlab::csv {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename Int>
Int parse_int(std::string_view text, std::size_t line, std::string_view field) {
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(line, std::string(field), "expected integer, got '" + std::string(text) + "'");
  }
  return value;
}

inline double parse_double(std::string_view text, std::size_t line, std::string_view field) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(line, std::string(field), "expected number, got '" + std::string(text) + "'");
  }
  return value;
}

// Shortest representation that parses back to the same double.
inline void append_double(std::string& out, double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

inline std::string format_double(double value) {
  std::string out;
  append_double(out, value);
  return out;
}

// Splits text into lines without copying; a trailing newline does not
// produce an empty final line.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const std::size_t nl = text_.find('\n', pos_);
    const std::size_t end = nl == std::string_view::npos ? text_.size() : nl;
    line = strip_cr(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    ++line_no_;
    return true;
  }

  std::size_t line_number() const noexcept { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

}  // namespace fraudlab::csv
