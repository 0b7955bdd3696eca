#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace postopt::csv {

/// Shortest-safe text for a double: 17 significant digits, locale independent.
/// Non-finite values print as nan / inf / -inf.
[[nodiscard]] std::string format_real(double value);

[[nodiscard]] double parse_real(std::string_view text);
[[nodiscard]] long long parse_integer(std::string_view text);

/// Writes fields joined by commas and a trailing newline.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

[[nodiscard]] std::vector<std::string> split_row(std::string_view line);

/// Whole table: header plus rows of raw fields.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range when missing.
  [[nodiscard]] std::size_t column(std::string_view name) const;
};

Table read_table(std::istream& in);

}  // namespace postopt::csv
