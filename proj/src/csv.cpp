//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dhn/error.hpp"

namespace dhn::csv {

namespace {
  std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string_view field = line.substr(
          start, comma == std::string_view::npos ? std::string_view::npos
                                                 : comma - start);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t'))
        field.remove_suffix(1);
      out.emplace_back(field);
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    return out;
  }
}  // namespace

Table parse(std::string_view text, std::string source) {
  Table table;
  table.source = std::move(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos)
      eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line.empty())
      continue;
    if (!have_header) {
      // tolerate a UTF-8 byte order mark
      if (line.starts_with("\xEF\xBB\xBF"))
        line.remove_prefix(3);
      table.header = split(line);
      have_header = true;
      continue;
    }
    Row row{line_no, split(line)};
    if (row.fields.size() != table.header.size())
      throw ParseError(table.source, line_no,
                       "expected " + std::to_string(table.header.size())
                           + " fields, found "
                           + std::to_string(row.fields.size()));
    table.rows.push_back(std::move(row));
  }
  if (!have_header)
    throw ParseError(table.source, 1, "missing header line");
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void Table::require_header(const std::vector<std::string_view>& expected) const {
  bool ok = header.size() == expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i)
    ok = header[i] == expected[i];
  if (!ok) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i)
        want += ',';
      want += expected[i];
    }
    throw ParseError(source, 1, "expected header '" + want + "'");
  }
}

double to_double(const Row& row, std::size_t col, const std::string& source) {
  const std::string& field = row.fields.at(col);
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last)
    throw ParseError(source, row.line, "not a number: '" + field + "'");
  return value;
}

std::optional<double> to_optional_double(const Row& row, std::size_t col,
                                         const std::string& source) {
  if (row.fields.at(col).empty())
    return std::nullopt;
  return to_double(row, col, source);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace dhn::csv
