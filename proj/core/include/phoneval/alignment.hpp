#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "phoneval/corpus.hpp"
#include "phoneval/lexicon.hpp"

namespace phoneval {

enum class EditKind { Correct, Substitution, Deletion, Insertion };

struct EditOp {
  EditKind kind = EditKind::Correct;
  std::optional<std::size_t> ref_index;  // absent for insertions
  std::optional<std::size_t> hyp_index;  // absent for deletions

  bool operator==(const EditOp&) const = default;
};

/// Counts and the derived error rate for one alignment or an aggregate of
/// alignments. rate is (S+D+I)/N; an empty reference against a non-empty
/// hypothesis yields the +infinity sentinel rather than a crash so corpus
/// aggregation stays total.
struct AlignmentResult {
  std::vector<EditOp> ops;
  std::int64_t S = 0;
  std::int64_t D = 0;
  std::int64_t I = 0;
  std::int64_t C = 0;
  std::int64_t N = 0;
  double rate = 0.0;

  std::int64_t errors() const { return S + D + I; }
};

double error_rate(std::int64_t errors, std::int64_t n);

/// Edit costs. The default (0 correct, 4 substitution, 3 insertion,
/// 3 deletion) replicates the usual sclite weighting; unit() gives plain
/// Levenshtein.
struct Costs {
  int substitution = 4;
  int deletion = 3;
  int insertion = 3;

  static Costs sclite() { return {4, 3, 3}; }
  static Costs unit() { return {1, 1, 1}; }
};

/// Lowercases, strips sentence punctuation, splits hyphenated compounds and
/// keeps internal apostrophes. May return an empty list.
std::vector<std::string> normalize_tokens(std::string_view text);

/// Minimum-cost alignment of two token sequences. Among equal-cost
/// alignments the one with the most diagonal (correct/substitution) moves
/// wins, and the backtrace prefers correct/substitution over deletion over
/// insertion; this makes the result deterministic and keeps the S/D/I
/// counts symmetric under operand swap.
AlignmentResult align(const std::vector<std::string>& ref,
                      const std::vector<std::string>& hyp,
                      const Costs& costs = Costs::sclite());

/// Word error rate over normalized tokens.
AlignmentResult score_wer(std::string_view ref_text, std::string_view hyp_text,
                          const Costs& costs = Costs::sclite());

enum class StressMode { Strip, Keep };

/// Phone error rate: the utterance's annotated phones against the
/// dictionary phonetization of the hypothesis tokens. N is the reference
/// phone count. OOV hypothesis tokens contribute no phones (their absence
/// shows up as deletions) and are reported in `oov`.
struct PerScore {
  AlignmentResult alignment;
  std::vector<std::string> oov;
  std::size_t derived_tokens = 0;
};

PerScore score_per(const ReferenceUtterance& ref,
                   const std::vector<std::string>& hyp_tokens,
                   const Lexicon& lex, StressMode stress_mode = StressMode::Strip,
                   const Costs& costs = Costs::sclite());

}  // namespace phoneval
