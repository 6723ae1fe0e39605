//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dhn::csv {

struct Row {
  std::size_t line;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

/// A comma-separated table with a mandatory header line. No quoting.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Throws ParseError unless the header matches `expected` exactly.
  void require_header(const std::vector<std::string_view>& expected) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source);

double to_double(const Row& row, std::size_t col, const std::string& source);
std::optional<double> to_optional_double(const Row& row, std::size_t col,
                                         const std::string& source);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace dhn::csv
