#pragma once

// Small helpers shared by the line-oriented text and CSV readers.

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace tfo {

/// Yields whitespace-separated tokens per non-empty line; `#` starts a comment.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool next(std::vector<std::string_view>& tokens);
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string buf_;
  std::size_t line_ = 0;
};

double parse_double(std::string_view s, std::size_t line);
long long parse_int(std::string_view s, std::size_t line);
std::size_t parse_count(std::string_view s, std::size_t line);

/// Minimal CSV table: header row plus string cells. No quoting support;
/// every file this project writes is plain comma-separated.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected_header);
CsvTable read_csv_file(const std::string& path, const std::vector<std::string>& expected_header);

}  // namespace tfo
