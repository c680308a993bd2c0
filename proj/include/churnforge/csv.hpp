#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace churnforge::csv {

/// RFC-4180 field quoting: quoted only when the field holds a comma, quote,
/// CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Formats a double with the shortest representation that round-trips.
std::string format_number(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws Error(MalformedCsv) if absent.
  std::size_t column(std::string_view name) const;
};

/// Parses an RFC-4180 document with a mandatory header row. Every row must
/// have the header's width.
Table parse(std::string_view text);

Table read_file(const std::filesystem::path& path);

}  // namespace churnforge::csv
