#include "phoneval/alignment.hpp"

#include <algorithm>
#include <cctype>

namespace phoneval {

namespace {

// Multi-byte punctuation stripped alongside the ASCII set.
constexpr std::string_view kEllipsis = "\xE2\x80\xA6";  // U+2026
constexpr std::string_view kEmDash = "\xE2\x80\x94";    // U+2014

bool strip_multibyte(std::string_view text, std::size_t& i) {
  for (std::string_view p : {kEllipsis, kEmDash}) {
    if (text.substr(i, p.size()) == p) {
      i += p.size();
      return true;
    }
  }
  return false;
}

}  // namespace

double error_rate(std::int64_t errors, std::int64_t n) {
  if (n > 0) return static_cast<double>(errors) / static_cast<double>(n);
  return errors == 0 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (strip_multibyte(text, i)) continue;
    char c = text[i++];
    switch (c) {
      case '.': case ',': case '?': case '!': case ';': case ':':
      case '"': case '(': case ')':
        break;  // stripped
      case '-':
        cleaned += ' ';
        break;
      default:
        cleaned += static_cast<char>(
            std::tolower(static_cast<unsigned char>(c)));
    }
  }

  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < cleaned.size()) {
    while (start < cleaned.size() &&
           std::isspace(static_cast<unsigned char>(cleaned[start])))
      ++start;
    if (start >= cleaned.size()) break;
    std::size_t end = start;
    while (end < cleaned.size() &&
           !std::isspace(static_cast<unsigned char>(cleaned[end])))
      ++end;
    std::string token = cleaned.substr(start, end - start);
    start = end;
    // Apostrophes survive word-internally only ("'caught'" -> "caught").
    std::size_t b = 0, e = token.size();
    while (b < e && token[b] == '\'') ++b;
    while (e > b && token[e - 1] == '\'') --e;
    if (e > b) tokens.push_back(token.substr(b, e - b));
  }
  return tokens;
}

AlignmentResult align(const std::vector<std::string>& ref,
                      const std::vector<std::string>& hyp,
                      const Costs& costs) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();

  // DP over (cost, -diagonal_moves): minimal edit cost first, then as many
  // correct/substitution pairings as possible. The secondary key pins down
  // the S/D/I counts among equal-cost alignments, making them invariant
  // under operand swap.
  struct Cell {
    std::int64_t cost;
    std::int32_t diag;
  };
  auto better = [](const Cell& a, const Cell& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.diag > b.diag);
  };

  std::vector<Cell> table((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cell& {
    return table[i * (m + 1) + j];
  };

  at(0, 0) = {0, 0};
  for (std::size_t i = 1; i <= n; ++i)
    at(i, 0) = {at(i - 1, 0).cost + costs.deletion, 0};
  for (std::size_t j = 1; j <= m; ++j)
    at(0, j) = {at(0, j - 1).cost + costs.insertion, 0};

  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      bool match = ref[i - 1] == hyp[j - 1];
      Cell diag = at(i - 1, j - 1);
      diag.cost += match ? 0 : costs.substitution;
      diag.diag += 1;
      Cell del = at(i - 1, j);
      del.cost += costs.deletion;
      Cell ins = at(i, j - 1);
      ins.cost += costs.insertion;
      Cell best = diag;
      if (better(del, best)) best = del;
      if (better(ins, best)) best = ins;
      at(i, j) = best;
    }
  }

  // Backtrace, preferring correct/substitution over deletion over insertion
  // whenever the cell value is reproduced.
  AlignmentResult result;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const Cell& here = at(i, j);
    if (i > 0 && j > 0) {
      bool match = ref[i - 1] == hyp[j - 1];
      Cell diag = at(i - 1, j - 1);
      diag.cost += match ? 0 : costs.substitution;
      diag.diag += 1;
      if (diag.cost == here.cost && diag.diag == here.diag) {
        result.ops.push_back({match ? EditKind::Correct : EditKind::Substitution,
                              i - 1, j - 1});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0) {
      Cell del = at(i - 1, j);
      del.cost += costs.deletion;
      if (del.cost == here.cost && del.diag == here.diag) {
        result.ops.push_back({EditKind::Deletion, i - 1, std::nullopt});
        --i;
        continue;
      }
    }
    result.ops.push_back({EditKind::Insertion, std::nullopt, j - 1});
    --j;
  }
  std::reverse(result.ops.begin(), result.ops.end());

  for (const EditOp& op : result.ops) {
    switch (op.kind) {
      case EditKind::Correct: ++result.C; break;
      case EditKind::Substitution: ++result.S; break;
      case EditKind::Deletion: ++result.D; break;
      case EditKind::Insertion: ++result.I; break;
    }
  }
  result.N = static_cast<std::int64_t>(n);
  result.rate = error_rate(result.errors(), result.N);
  return result;
}

AlignmentResult score_wer(std::string_view ref_text, std::string_view hyp_text,
                          const Costs& costs) {
  return align(normalize_tokens(ref_text), normalize_tokens(hyp_text), costs);
}

PerScore score_per(const ReferenceUtterance& ref,
                   const std::vector<std::string>& hyp_tokens,
                   const Lexicon& lex, StressMode stress_mode,
                   const Costs& costs) {
  bool strip = stress_mode == StressMode::Strip;

  std::vector<std::string> ref_labels;
  ref_labels.reserve(ref.phones.size());
  for (const TimedToken& phone : ref.phones)
    ref_labels.push_back(strip ? strip_stress_label(phone.label) : phone.label);

  Lexicon::Phonetization hyp = lex.hypothesis_phones(hyp_tokens);
  std::vector<std::string> hyp_labels = phone_labels(hyp.phones, strip);

  PerScore score;
  score.alignment = align(ref_labels, hyp_labels, costs);
  score.oov = std::move(hyp.oov);
  score.derived_tokens = hyp.derived_tokens;
  return score;
}

}  // namespace phoneval
