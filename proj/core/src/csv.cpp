#include "phoneval/csv.hpp"

#include "phoneval/errors.hpp"

namespace phoneval {

std::vector<CsvRow> parse_csv(std::string_view text,
                              const std::string& filename) {
  std::vector<CsvRow> rows;
  std::size_t i = 0, line = 1;
  const std::size_t n = text.size();
  while (i < n) {
    // Skip blank lines.
    if (text[i] == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n') {
      ++line;
      i += 2;
      continue;
    }
    CsvRow row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool done = false;
    while (i < n && !done) {
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
      } else {
        switch (c) {
          case '"':
            if (field.empty()) {
              in_quotes = true;
            } else {
              field += c;  // stray quote mid-field, keep literally
            }
            ++i;
            break;
          case ',':
            row.fields.push_back(std::move(field));
            field.clear();
            ++i;
            break;
          case '\r':
            if (i + 1 < n && text[i + 1] == '\n') {
              i += 2;
              ++line;
              done = true;
            } else {
              field += c;
              ++i;
            }
            break;
          case '\n':
            ++i;
            ++line;
            done = true;
            break;
          default:
            field += c;
            ++i;
        }
      }
    }
    if (in_quotes)
      throw ParseError(filename, row.line, "unterminated quoted CSV field");
    row.fields.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  out += '\n';
  return out;
}

}  // namespace phoneval
