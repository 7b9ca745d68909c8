#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace phoneval {

struct Interval {
  double xmin = 0.0;
  double xmax = 0.0;
  std::string label;

  bool operator==(const Interval&) const = default;
};

struct Tier {
  std::string name;
  std::vector<Interval> intervals;  // sorted by xmin, non-overlapping
  double xmin = 0.0;
  double xmax = 0.0;

  bool operator==(const Tier&) const = default;
};

/// A Praat annotation grid restricted to interval tiers. Point tiers in the
/// source file are parsed and dropped.
struct TextGrid {
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<Tier> tiers;

  bool operator==(const TextGrid&) const = default;
};

/// Parses a Praat "ooTextFile" TextGrid, long or short text format.
/// UTF-8 and UTF-16 (BOM-detected) encodings are accepted. Labels are
/// unescaped ("" becomes "). Throws ParseError with a line number on
/// malformed headers, tier count mismatches, or non-monotonic boundaries.
TextGrid parse_textgrid(std::string_view document,
                        const std::string& filename = "");

/// Serializers for the two Praat text layouts. Times print with enough
/// digits to round-trip exactly.
std::string to_long_format(const TextGrid& grid);
std::string to_short_format(const TextGrid& grid);

/// Case-insensitive tier search against a pipe-separated alias list, e.g.
/// "word|words|ortho". Returns nullptr when no tier matches.
const Tier* find_tier(const TextGrid& grid, std::string_view aliases);

}  // namespace phoneval
