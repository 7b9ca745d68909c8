#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phoneval/lexicon.hpp"
#include "phoneval/marker_codes.hpp"
#include "phoneval/scoring.hpp"

namespace phoneval {

/// A token position where a sociophonetic variable could occur, with the
/// phone subsequence that fired the predicate.
struct MarkerContext {
  std::string utterance_id;
  std::size_t token_index = 0;
  Marker marker = Marker::LowBackMerger;
  std::string trigger;

  bool operator==(const MarkerContext&) const = default;
};

struct SkippedWord {
  std::string utterance_id;
  std::size_t token_index = 0;
  std::string word;

  auto operator<=>(const SkippedWord&) const = default;
};

struct ContextScan {
  std::vector<MarkerContext> contexts;
  std::vector<SkippedWord> skipped;  // no pronunciation and no phone range
};

/// Evaluates the eleven context predicates over each word's canonical
/// pronunciation (dictionary first variant), falling back to the word's
/// annotated phone range. Yields at most one context per (token, marker).
ContextScan detect_contexts(const ReferenceUtterance& ref, const Lexicon& lex);

/// Context predicates on a stress-free phone-label sequence. Exposed for
/// tests; detect_contexts is the production entry point.
std::optional<std::string> marker_trigger(Marker marker,
                                          const std::vector<std::string>& phones);

struct CoocKey {
  std::string group;  // ethnicity label
  std::string system_id;
  Marker marker = Marker::LowBackMerger;

  auto operator<=>(const CoocKey&) const = default;
};

/// Per (group x system x marker): how many reference tokens sat in a marker
/// context, how many of those were annotated as realized, how many realized
/// tokens the system got wrong (substitution or deletion), and the cell's
/// word-level S+D+I (same value for every marker of the group x system).
struct CoocCell {
  std::int64_t overlap = 0;
  std::int64_t contexts = 0;
  std::int64_t realized = 0;
  std::int64_t total_errors = 0;

  bool operator==(const CoocCell&) const = default;
};

struct CooccurrenceTable {
  std::string manifest_digest;
  std::map<CoocKey, CoocCell> cells;
  std::vector<SkippedWord> skipped;

  bool operator==(const CooccurrenceTable&) const = default;
};

enum class OverlapMode {
  RealizedOnly,  // errored token counts only when annotated realized=1
  AnyContext,    // sensitivity mode: any errored token in a context counts
};

/// Cross-references word-level errors with marker contexts and realization
/// annotations. Insertions never overlap (there is no reference token).
/// Realization records for tokens that are not contexts join `realized`
/// nowhere; records with out-of-range token_index are a hard error.
CooccurrenceTable cooccurrence(const std::vector<WordAlignment>& alignments,
                               const std::vector<MarkerContext>& contexts,
                               const std::vector<SkippedWord>& skipped,
                               const std::vector<MarkerRealization>& realizations,
                               const Corpus& corpus,
                               OverlapMode mode = OverlapMode::RealizedOnly);

/// overlap / contexts per cell; cells without contexts are not applicable
/// and reported absent, never as zero.
std::map<CoocKey, std::optional<double>> normalized_rates(
    const CooccurrenceTable& table);

/// Mean realized instances per speaker, per (ethnicity, marker). The
/// denominator counts only the group's speakers that carry at least one
/// annotation record; groups with none are omitted and noted.
struct RealizationMeans {
  std::map<std::string, int> annotated_speakers;           // group -> count
  std::map<std::pair<std::string, Marker>, double> means;  // (group, marker)
  std::vector<std::string> notes;

  bool operator==(const RealizationMeans&) const = default;
};

RealizationMeans realization_means(
    const std::vector<MarkerRealization>& realizations,
    const Manifest& manifest);

std::string to_json_string(const CooccurrenceTable& table,
                           const RealizationMeans& means);
void cooccurrence_from_json(std::string_view json, CooccurrenceTable& table,
                            RealizationMeans& means);

}  // namespace phoneval
