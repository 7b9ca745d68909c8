#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phoneval/alignment.hpp"
#include "phoneval/corpus.hpp"
#include "phoneval/lexicon.hpp"

namespace phoneval {

/// A manifest joined with its parsed, extracted reference utterances
/// (parallel to manifest.utterances).
struct Corpus {
  Manifest manifest;
  std::vector<ReferenceUtterance> references;

  const ReferenceUtterance* reference(std::string_view utterance_id) const;
};

struct CorpusLoad {
  Corpus corpus;
  std::vector<std::string> warnings;
};

/// Reads speakers.csv and utterances.csv from `manifest_dir`, then parses
/// and extracts every referenced TextGrid (paths resolve relative to the
/// manifest directory).
CorpusLoad load_corpus(const std::filesystem::path& manifest_dir,
                       std::string_view word_tier = kDefaultWordTierAliases,
                       std::string_view phone_tier = kDefaultPhoneTierAliases);

enum class MetricKind { WER, PER };
std::string_view metric_name(MetricKind m);

/// Summed S/D/I/C/N counts with the rate derived after pooling.
struct Tally {
  std::int64_t S = 0;
  std::int64_t D = 0;
  std::int64_t I = 0;
  std::int64_t C = 0;
  std::int64_t N = 0;
  double rate = 0.0;

  void add(const AlignmentResult& r);
  void finish() { rate = error_rate(S + D + I, N); }
  bool operator==(const Tally&) const = default;
};

struct CellKey {
  std::string speaker_id;
  std::string system_id;
  MetricKind metric = MetricKind::WER;

  auto operator<=>(const CellKey&) const = default;
};

struct GroupKey {
  std::string group;  // ethnicity label
  std::string system_id;
  MetricKind metric = MetricKind::WER;

  auto operator<=>(const GroupKey&) const = default;
};

/// Mean of the member speakers' rates, with the standard error of that mean
/// (sample sd / sqrt(n)); absent when only one speaker contributes.
struct GroupStat {
  double mean = 0.0;
  std::optional<double> se;
  int n = 0;

  bool operator==(const GroupStat&) const = default;
};

struct ScoreTable {
  std::string manifest_digest;
  std::map<CellKey, Tally> cells;        // pooled per speaker x system
  std::map<GroupKey, GroupStat> groups;  // mean of speaker rates

  std::vector<std::string> systems() const;
  std::vector<std::string> group_labels() const;
  bool operator==(const ScoreTable&) const = default;
};

struct CoverageGap {
  std::string utterance_id;
  std::string system_id;

  auto operator<=>(const CoverageGap&) const = default;
};

struct OovCount {
  std::string token;
  std::int64_t count = 0;

  bool operator==(const OovCount&) const = default;
};

struct ScoreOptions {
  bool wer = true;
  bool per = false;
  StressMode stress_mode = StressMode::Strip;
  Costs costs = Costs::sclite();
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct CorpusScores {
  ScoreTable table;
  std::vector<CoverageGap> coverage;            // sorted
  std::map<std::string, std::vector<OovCount>> oov_by_system;
  std::size_t derived_tokens = 0;
  std::size_t hypothesis_tokens = 0;
};

/// Scores every hypothesis against the corpus. Per-speaker cells pool S/D/I
/// counts over that speaker's utterances before the rate is taken; group
/// rollups average speaker rates. A hypothesis for an unknown utterance is a
/// hard error; utterances a system never transcribed are listed in
/// `coverage` and excluded from that system's cells. Deterministic for any
/// thread count.
CorpusScores score_corpus(const Corpus& corpus,
                          const std::vector<Hypothesis>& hypotheses,
                          const Lexicon* lex, const ScoreOptions& options);

/// Word-level alignments per (utterance, system), in hypothesis order. The
/// reference side is the utterance's annotated word sequence, so op indices
/// live in the same token space as marker annotations.
struct WordAlignment {
  std::string utterance_id;
  std::string system_id;
  AlignmentResult alignment;
};

std::vector<WordAlignment> word_alignments(
    const Corpus& corpus, const std::vector<Hypothesis>& hypotheses,
    const Costs& costs = Costs::sclite(), unsigned threads = 0);

/// Word-interval labels normalized one-to-one (no splitting), keeping
/// alignment indices in the annotation's token space.
std::vector<std::string> utterance_tokens(const ReferenceUtterance& ref);

/// Mean relative PER reduction per system: per speaker (WER-PER)/WER,
/// undefined speakers (WER = 0 or non-finite) excluded, then averaged.
/// nullopt when no speaker has a defined reduction.
std::map<std::string, std::optional<double>> per_reduction(
    const ScoreTable& table);

std::string to_json_string(const ScoreTable& table);
ScoreTable score_table_from_json(std::string_view json);

/// Merges PER cells into a WER table (or vice versa). Digest mismatch is an
/// error; duplicate cells are an error.
ScoreTable merge_score_tables(const ScoreTable& a, const ScoreTable& b);

}  // namespace phoneval
