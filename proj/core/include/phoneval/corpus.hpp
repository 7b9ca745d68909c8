#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phoneval/marker_codes.hpp"
#include "phoneval/textgrid.hpp"

namespace phoneval {

enum class EthnicityCode { AA, CA, CX, YA, Other };
enum class GenderCode { F, M, Other };

struct Speaker {
  std::string id;
  EthnicityCode ethnicity = EthnicityCode::Other;
  std::string ethnicity_label;  // raw manifest value; group key for rollups
  GenderCode gender = GenderCode::Other;
  std::string gender_label;
  int age = 0;

  bool operator==(const Speaker&) const = default;
};

struct TimedToken {
  std::string label;
  double xmin = 0.0;
  double xmax = 0.0;

  bool operator==(const TimedToken&) const = default;
};

/// A word-and-phone annotated utterance. word_phone_map[i] is the half-open
/// range of phone indices belonging to word i; ranges are contiguous,
/// non-overlapping and ordered.
struct ReferenceUtterance {
  std::string id;
  std::string speaker_id;
  std::vector<TimedToken> words;
  std::vector<TimedToken> phones;
  std::vector<std::pair<std::size_t, std::size_t>> word_phone_map;

  bool operator==(const ReferenceUtterance&) const = default;
};

struct Hypothesis {
  std::string utterance_id;
  std::string system_id;
  std::string text;
  std::size_t source_line = 0;  // 1-based line in the JSONL source

  bool operator==(const Hypothesis& other) const {
    return utterance_id == other.utterance_id &&
           system_id == other.system_id && text == other.text;
  }
};

struct MarkerRealization {
  std::string utterance_id;
  std::size_t token_index = 0;
  Marker marker = Marker::LowBackMerger;
  bool realized = false;

  bool operator==(const MarkerRealization&) const = default;
};

struct UtteranceEntry {
  std::string id;
  std::string speaker_id;
  std::string textgrid_path;
  std::string reference_text;

  bool operator==(const UtteranceEntry&) const = default;
};

struct Manifest {
  std::vector<Speaker> speakers;
  std::vector<UtteranceEntry> utterances;
  std::string digest;  // content hash; stamps every derived artifact

  const Speaker* speaker(std::string_view id) const;
  const UtteranceEntry* utterance(std::string_view id) const;
};

struct ManifestLoad {
  Manifest manifest;
  std::vector<std::string> warnings;
};

/// speakers.csv: header `speaker_id,ethnicity,gender,age`. Unknown ethnicity
/// or gender codes map to Other with a warning; duplicate ids, bad ages and
/// missing columns are errors.
std::vector<Speaker> load_speakers(std::string_view csv,
                                   const std::string& filename,
                                   std::vector<std::string>* warnings);

/// utterances.csv: header `utterance_id,speaker_id,textgrid_path,reference_text`.
std::vector<UtteranceEntry> load_utterance_index(std::string_view csv,
                                                 const std::string& filename);

/// Joins the two manifest CSVs. Dangling speaker references are a hard
/// error; the digest covers both documents byte-for-byte.
ManifestLoad load_manifest(std::string_view speakers_csv,
                           std::string_view utterances_csv,
                           const std::string& speakers_file = "speakers.csv",
                           const std::string& utterances_file = "utterances.csv");

/// JSON-lines, one {"utterance_id","system_id","text"} object per line.
/// Order is preserved; duplicate (utterance, system) pairs are rejected.
std::vector<Hypothesis> load_hypotheses(std::string_view jsonl,
                                        const std::string& filename = "");

/// TSV with header `utterance_id	token_index	marker	realized`.
std::vector<MarkerRealization> load_marker_annotations(
    std::string_view tsv, const std::string& filename = "");

/// Pulls the word and phone tiers out of a grid. Empty-label intervals are
/// silence and are dropped. Phones attach to words by midpoint containment;
/// a phone that leaks more than 1 ms past its word's boundary is an error.
/// Tier arguments are pipe-separated alias lists matched case-insensitively.
ReferenceUtterance extract_reference(const TextGrid& grid,
                                     std::string_view word_tier,
                                     std::string_view phone_tier,
                                     std::string utterance_id,
                                     std::string speaker_id);

inline constexpr std::string_view kDefaultWordTierAliases = "word|words|ortho";
inline constexpr std::string_view kDefaultPhoneTierAliases =
    "phone|phones|segment";

/// FNV-1a 64 over the raw manifest bytes, rendered as 16 hex digits.
std::string manifest_digest(std::string_view speakers_csv,
                            std::string_view utterances_csv);

std::string_view ethnicity_code_label(EthnicityCode code);

}  // namespace phoneval
