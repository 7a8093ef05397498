#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mlpolar::csv {

/// Split one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

/// Quote a field only when it needs it.
std::string escape(std::string_view field);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

bool parse_double(std::string_view text, double& out);
bool parse_int64(std::string_view text, std::int64_t& out);

struct Table {
  std::vector<std::string> header;
  /// Each row paired with its 1-based line number in the source file.
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

  /// Index of a header column, or -1.
  int column(std::string_view name) const;
};

/// Read a UTF-8 CSV file with a header line. Blank lines are skipped.
Table read_file(const std::string& path);
Table read_stream(std::istream& in);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace mlpolar::csv
