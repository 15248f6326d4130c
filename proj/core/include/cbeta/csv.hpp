#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace cbeta::csv {

// Splits one CSV line on commas. No quoting support: every schema in this
// library is purely numeric apart from ISO dates and coin symbols.
std::vector<std::string_view> split(std::string_view line);

// Strict decimal parse: whole field must be consumed, result finite.
bool parse_double(std::string_view field, double& out);

// Shortest representation that round-trips to the same double.
std::string format_double(double value);

// Reads lines, stripping a trailing '\r'. Tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool next(std::string& line);
  std::size_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace cbeta::csv
