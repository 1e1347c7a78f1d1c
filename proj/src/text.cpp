#include "tfo/text.hpp"

#include <charconv>
#include <fstream>

#include "tfo/error.hpp"

namespace tfo {

bool LineReader::next(std::vector<std::string_view>& tokens) {
  while (std::getline(in_, buf_)) {
    ++line_;
    tokens.clear();
    std::string_view view(buf_);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::size_t i = 0;
    while (i < view.size()) {
      while (i < view.size() && std::isspace(static_cast<unsigned char>(view[i]))) ++i;
      std::size_t j = i;
      while (j < view.size() && !std::isspace(static_cast<unsigned char>(view[j]))) ++j;
      if (j > i) tokens.push_back(view.substr(i, j - i));
      i = j;
    }
    if (!tokens.empty()) return true;
  }
  return false;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("invalid number '" + std::string(s) + "'", line);
  return v;
}

long long parse_int(std::string_view s, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("invalid integer '" + std::string(s) + "'", line);
  return v;
}

std::size_t parse_count(std::string_view s, std::size_t line) {
  const long long v = parse_int(s, line);
  if (v < 0) throw ParseError("negative count '" + std::string(s) + "'", line);
  return static_cast<std::size_t>(v);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError("missing CSV column '" + std::string(name) + "'", 0);
}

namespace {
std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}
}  // namespace

CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected_header) {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty CSV file", 0);
  ++lineno;
  table.header = split_commas(line);
  if (!expected_header.empty() && table.header != expected_header)
    throw ParseError("unexpected CSV header '" + line + "'", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_commas(line);
    if (cells.size() != table.header.size()) throw ParseError("wrong CSV column count", lineno);
    table.rows.push_back(std::move(cells));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return read_csv(in, expected_header);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

}  // namespace tfo
