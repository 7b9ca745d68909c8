#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phoneval {

/// Input that violates a file format. Carries the source file and 1-based
/// line number when known (0 = unknown).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : std::runtime_error(Format(file, line, what)),
        file_(std::move(file)),
        line_(line) {}

  explicit ParseError(const std::string& what)
      : std::runtime_error(what) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string Format(const std::string& file, std::size_t line,
                            const std::string& what) {
    std::string s = file.empty() ? "<input>" : file;
    if (line > 0) s += ":" + std::to_string(line);
    return s + ": " + what;
  }

  std::string file_;
  std::size_t line_ = 0;
};

/// Structurally valid input that breaks a cross-record constraint:
/// duplicate keys, dangling references, out-of-range indices.
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace phoneval
