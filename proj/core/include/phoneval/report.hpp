#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phoneval/markers.hpp"
#include "phoneval/scoring.hpp"
#include "phoneval/stats.hpp"

namespace phoneval {

/// Group rollups arranged for display: rows = systems, columns = groups,
/// plus per-group means over systems (the table's Mean row).
struct RateTable {
  std::vector<std::string> systems;
  std::vector<std::string> groups;
  std::map<std::pair<std::string, std::string>, GroupStat> cells;  // (group, system)
  std::map<std::string, double> column_means;

  bool operator==(const RateTable&) const = default;
};

struct Diagnostics {
  std::map<std::string, std::vector<OovCount>> oov_by_system;
  std::vector<CoverageGap> uncovered;
  std::vector<SkippedWord> skipped_words;
  std::vector<std::string> warnings;

  bool operator==(const Diagnostics&) const = default;
};

/// Everything the toolkit can say about one corpus run. Sections are
/// optional; a WER-only run simply marks the rest absent. Every number here
/// is copied or folded from a computed artifact — the renderers only format.
struct Report {
  std::string manifest_digest;
  std::optional<RateTable> wer_table;
  std::optional<RateTable> per_table;
  std::optional<std::map<std::string, std::optional<double>>> reduction_by_system;
  std::optional<RealizationMeans> realization_means;
  std::optional<CooccurrenceTable> cooccurrence;
  std::optional<std::map<CoocKey, std::optional<double>>> normalized_rates;
  std::optional<StatsArtifact> stats;
  Diagnostics diagnostics;

  bool operator==(const Report&) const = default;
};

/// Assembles a report from whichever artifacts exist. All inputs must carry
/// the same manifest digest; a mismatch is a hard error (tables from
/// different corpora must not mix). Reduction and normalized rates are
/// derived here, not in the renderer.
Report build_report(const ScoreTable* scores, const CooccurrenceTable* cooc,
                    const RealizationMeans* means, const StatsArtifact* stats,
                    const Diagnostics& diagnostics);

enum class ReportFormat { Json, CsvBundle, Markdown };

struct NamedFile {
  std::string path;  // relative, e.g. "tables/wer.csv"
  std::string contents;
};

/// json: one full-precision document. csv-bundle: one file per present
/// table. markdown: display rendering with rates half-up-rounded to whole
/// percent. Pure functions of the report value.
std::vector<NamedFile> render(const Report& report, ReportFormat format);

/// report.json, report.md and tables/*.csv under `dir`.
void write_report_dir(const Report& report, const std::filesystem::path& dir);

Report report_from_json(std::string_view json);

/// Display helper: rate as a whole percent, half-up.
std::string percent_display(double rate);

/// Canonical group ordering: AA, CA, CX, YA first, then others by name.
std::vector<std::string> sort_groups(std::vector<std::string> groups);

}  // namespace phoneval
