#include "phoneval/textgrid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>

#include "phoneval/errors.hpp"

namespace phoneval {

namespace {

// Praat forces tier spans to the grid span when writing; anything beyond
// decimal-representation noise is a broken file.
constexpr double kSpanTolerance = 1e-9;

bool is_utf16(std::string_view bytes, bool& big_endian) {
  if (bytes.size() >= 2) {
    auto b0 = static_cast<unsigned char>(bytes[0]);
    auto b1 = static_cast<unsigned char>(bytes[1]);
    if (b0 == 0xFE && b1 == 0xFF) {
      big_endian = true;
      return true;
    }
    if (b0 == 0xFF && b1 == 0xFE) {
      big_endian = false;
      return true;
    }
  }
  return false;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string utf16_to_utf8(std::string_view bytes, bool big_endian) {
  std::string out;
  out.reserve(bytes.size() / 2);
  std::size_t i = 2;  // skip BOM
  auto unit = [&](std::size_t at) -> std::uint32_t {
    auto lo = static_cast<unsigned char>(bytes[at]);
    auto hi = static_cast<unsigned char>(bytes[at + 1]);
    return big_endian ? (static_cast<std::uint32_t>(lo) << 8 | hi)
                      : (static_cast<std::uint32_t>(hi) << 8 | lo);
  };
  while (i + 1 < bytes.size()) {
    std::uint32_t u = unit(i);
    i += 2;
    if (u >= 0xD800 && u <= 0xDBFF && i + 1 < bytes.size()) {
      std::uint32_t lo = unit(i);
      if (lo >= 0xDC00 && lo <= 0xDFFF) {
        u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    append_utf8(out, u);
  }
  return out;
}

// Lenient value scanner in the spirit of Praat's own text reader: numbers,
// quoted strings and <flags> are pulled out in order, so the same code path
// parses both the long format (with "xmin = ..." decoration) and the short
// format (bare values). Bracketed index tokens like "item [1]:" are noise.
class Scanner {
 public:
  Scanner(std::string_view text, std::string filename)
      : text_(text), file_(std::move(filename)) {}

  double next_number(const char* what) {
    skip_noise();
    if (pos_ >= text_.size())
      fail(std::string("unexpected end of file, expected ") + what);
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    if (*begin == '+') ++begin;  // from_chars rejects a leading '+'
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin)
      fail(std::string("expected ") + what);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  std::string next_string(const char* what) {
    std::size_t q = text_.find('"', pos_);
    if (q == std::string_view::npos)
      fail(std::string("unexpected end of file, expected ") + what);
    advance_to(q + 1);
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '"') {
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
          out += '"';
          advance_to(pos_ + 2);
          continue;
        }
        advance_to(pos_ + 1);
        return out;
      }
      out += c;
      advance_to(pos_ + 1);
    }
    fail("unterminated string");
    return out;
  }

  bool next_flag(const char* what) {
    std::size_t lt = text_.find('<', pos_);
    if (lt == std::string_view::npos)
      fail(std::string("unexpected end of file, expected ") + what);
    std::size_t gt = text_.find('>', lt);
    if (gt == std::string_view::npos) fail("unterminated <flag>");
    advance_to(gt + 1);
    std::string_view flag = text_.substr(lt + 1, gt - lt - 1);
    if (flag == "exists") return true;
    if (flag == "absent") return false;
    fail("unrecognized flag <" + std::string(flag) + ">");
    return false;
  }

  std::size_t line() const { return line_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(file_, line_, message);
  }

 private:
  void advance_to(std::size_t new_pos) {
    for (std::size_t i = pos_; i < new_pos && i < text_.size(); ++i)
      if (text_[i] == '\n') ++line_;
    pos_ = new_pos;
  }

  void skip_noise() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '[') {  // "item [1]:" — swallow the bracketed index
        std::size_t close = text_.find(']', pos_);
        if (close == std::string_view::npos) fail("unbalanced '['");
        advance_to(close + 1);
      } else if (std::isspace(static_cast<unsigned char>(c)) ||
                 std::isalpha(static_cast<unsigned char>(c)) || c == '=' ||
                 c == '?' || c == ':' || c == '!' || c == ']') {
        advance_to(pos_ + 1);
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::string file_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::string escape_label(std::string_view label) {
  std::string out;
  for (char c : label) {
    if (c == '"') out += '"';
    out += c;
  }
  return out;
}

std::string fmt_time(double t) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, t);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

TextGrid parse_textgrid(std::string_view document,
                        const std::string& filename) {
  std::string transcoded;
  bool big_endian = false;
  if (is_utf16(document, big_endian)) {
    transcoded = utf16_to_utf8(document, big_endian);
    document = transcoded;
  } else if (document.size() >= 3 &&
             static_cast<unsigned char>(document[0]) == 0xEF &&
             static_cast<unsigned char>(document[1]) == 0xBB &&
             static_cast<unsigned char>(document[2]) == 0xBF) {
    document.remove_prefix(3);
  }

  Scanner sc(document, filename);
  std::string file_type = sc.next_string("File type");
  if (file_type != "ooTextFile")
    sc.fail("malformed header: File type is \"" + file_type +
            "\", expected \"ooTextFile\"");
  std::string object_class = sc.next_string("Object class");
  if (object_class != "TextGrid")
    sc.fail("malformed header: Object class is \"" + object_class +
            "\", expected \"TextGrid\"");

  TextGrid grid;
  grid.xmin = sc.next_number("grid xmin");
  grid.xmax = sc.next_number("grid xmax");
  if (grid.xmin > grid.xmax) sc.fail("grid xmin exceeds xmax");

  if (!sc.next_flag("tiers? flag")) return grid;

  auto size = static_cast<long>(sc.next_number("tier count"));
  if (size < 0) sc.fail("negative tier count");
  for (long t = 0; t < size; ++t) {
    std::string tier_class = sc.next_string("tier class");
    Tier tier;
    tier.name = sc.next_string("tier name");
    tier.xmin = sc.next_number("tier xmin");
    tier.xmax = sc.next_number("tier xmax");

    if (std::abs(tier.xmin - grid.xmin) > kSpanTolerance ||
        std::abs(tier.xmax - grid.xmax) > kSpanTolerance)
      sc.fail("tier \"" + tier.name + "\" span [" + fmt_time(tier.xmin) +
              ", " + fmt_time(tier.xmax) + "] does not match grid span [" +
              fmt_time(grid.xmin) + ", " + fmt_time(grid.xmax) + "]");

    if (tier_class == "IntervalTier") {
      auto n = static_cast<long>(sc.next_number("interval count"));
      if (n < 0) sc.fail("negative interval count");
      tier.intervals.reserve(static_cast<std::size_t>(n));
      for (long k = 0; k < n; ++k) {
        Interval iv;
        iv.xmin = sc.next_number("interval xmin");
        iv.xmax = sc.next_number("interval xmax");
        iv.label = sc.next_string("interval text");
        if (iv.xmin >= iv.xmax)
          sc.fail("interval " + std::to_string(k + 1) + " of tier \"" +
                  tier.name + "\" has non-positive length");
        if (!tier.intervals.empty() &&
            iv.xmin < tier.intervals.back().xmax - kSpanTolerance)
          sc.fail("non-monotonic interval boundaries in tier \"" + tier.name +
                  "\" at interval " + std::to_string(k + 1));
        tier.intervals.push_back(std::move(iv));
      }
      grid.tiers.push_back(std::move(tier));
    } else if (tier_class == "TextTier") {
      // Point tier: consume its points, keep nothing.
      auto n = static_cast<long>(sc.next_number("point count"));
      for (long k = 0; k < n; ++k) {
        sc.next_number("point time");
        sc.next_string("point mark");
      }
    } else {
      sc.fail("unknown tier class \"" + tier_class + "\"");
    }
  }
  return grid;
}

std::string to_long_format(const TextGrid& grid) {
  std::string out;
  out += "File type = \"ooTextFile\"\n";
  out += "Object class = \"TextGrid\"\n\n";
  out += "xmin = " + fmt_time(grid.xmin) + "\n";
  out += "xmax = " + fmt_time(grid.xmax) + "\n";
  if (grid.tiers.empty()) {
    out += "tiers? <absent>\n";
    return out;
  }
  out += "tiers? <exists>\n";
  out += "size = " + std::to_string(grid.tiers.size()) + "\n";
  out += "item []:\n";
  for (std::size_t t = 0; t < grid.tiers.size(); ++t) {
    const Tier& tier = grid.tiers[t];
    out += "    item [" + std::to_string(t + 1) + "]:\n";
    out += "        class = \"IntervalTier\"\n";
    out += "        name = \"" + escape_label(tier.name) + "\"\n";
    out += "        xmin = " + fmt_time(tier.xmin) + "\n";
    out += "        xmax = " + fmt_time(tier.xmax) + "\n";
    out += "        intervals: size = " + std::to_string(tier.intervals.size()) +
           "\n";
    for (std::size_t k = 0; k < tier.intervals.size(); ++k) {
      const Interval& iv = tier.intervals[k];
      out += "        intervals [" + std::to_string(k + 1) + "]:\n";
      out += "            xmin = " + fmt_time(iv.xmin) + "\n";
      out += "            xmax = " + fmt_time(iv.xmax) + "\n";
      out += "            text = \"" + escape_label(iv.label) + "\"\n";
    }
  }
  return out;
}

std::string to_short_format(const TextGrid& grid) {
  std::string out;
  out += "File type = \"ooTextFile\"\n";
  out += "Object class = \"TextGrid\"\n\n";
  out += fmt_time(grid.xmin) + "\n";
  out += fmt_time(grid.xmax) + "\n";
  if (grid.tiers.empty()) {
    out += "<absent>\n";
    return out;
  }
  out += "<exists>\n";
  out += std::to_string(grid.tiers.size()) + "\n";
  for (const Tier& tier : grid.tiers) {
    out += "\"IntervalTier\"\n";
    out += "\"" + escape_label(tier.name) + "\"\n";
    out += fmt_time(tier.xmin) + "\n";
    out += fmt_time(tier.xmax) + "\n";
    out += std::to_string(tier.intervals.size()) + "\n";
    for (const Interval& iv : tier.intervals) {
      out += fmt_time(iv.xmin) + "\n";
      out += fmt_time(iv.xmax) + "\n";
      out += "\"" + escape_label(iv.label) + "\"\n";
    }
  }
  return out;
}

const Tier* find_tier(const TextGrid& grid, std::string_view aliases) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  std::vector<std::string> names;
  std::size_t start = 0;
  while (start <= aliases.size()) {
    std::size_t bar = aliases.find('|', start);
    if (bar == std::string_view::npos) bar = aliases.size();
    if (bar > start) names.push_back(lower(aliases.substr(start, bar - start)));
    start = bar + 1;
  }
  for (const std::string& name : names)
    for (const Tier& tier : grid.tiers)
      if (lower(tier.name) == name) return &tier;
  return nullptr;
}

}  // namespace phoneval
