#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace phoneval {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line of the row start
};

/// Minimal RFC 4180 reader: comma separator, double-quoted fields with ""
/// escapes, CRLF or LF line ends. Blank lines are skipped.
std::vector<CsvRow> parse_csv(std::string_view text,
                              const std::string& filename = "");

/// Quotes a field only when it needs quoting.
std::string csv_escape(std::string_view field);

std::string csv_join(const std::vector<std::string>& fields);

}  // namespace phoneval
