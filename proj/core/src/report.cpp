#include "phoneval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "phoneval/csv.hpp"
#include "phoneval/errors.hpp"

namespace phoneval {

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double number_from(const nlohmann::json& j) {
  if (j.is_string()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

int group_rank(const std::string& g) {
  if (g == "AA") return 0;
  if (g == "CA") return 1;
  if (g == "CX") return 2;
  if (g == "YA") return 3;
  return 4;
}

void check_digest(std::string& digest, const std::string& candidate,
                  const char* what) {
  if (digest.empty()) {
    digest = candidate;
  } else if (digest != candidate) {
    throw DataError(std::string("manifest digest mismatch: ") + what +
                    " was computed from a different corpus (" + candidate +
                    " vs " + digest + ")");
  }
}

RateTable make_rate_table(const ScoreTable& scores, MetricKind metric) {
  RateTable table;
  std::set<std::string> systems, groups;
  for (const auto& [key, stat] : scores.groups) {
    if (key.metric != metric) continue;
    systems.insert(key.system_id);
    groups.insert(key.group);
    table.cells[{key.group, key.system_id}] = stat;
  }
  table.systems.assign(systems.begin(), systems.end());
  table.groups = sort_groups({groups.begin(), groups.end()});
  for (const std::string& group : table.groups) {
    double sum = 0.0;
    int n = 0;
    for (const std::string& system : table.systems) {
      auto it = table.cells.find({group, system});
      if (it == table.cells.end()) continue;
      sum += it->second.mean;
      ++n;
    }
    if (n > 0) table.column_means[group] = sum / n;
  }
  return table;
}

bool has_metric(const ScoreTable& scores, MetricKind metric) {
  for (const auto& [key, _] : scores.cells)
    if (key.metric == metric) return true;
  return false;
}

}  // namespace

std::vector<std::string> sort_groups(std::vector<std::string> groups) {
  std::sort(groups.begin(), groups.end(),
            [](const std::string& a, const std::string& b) {
              int ra = group_rank(a), rb = group_rank(b);
              return ra != rb ? ra < rb : a < b;
            });
  return groups;
}

std::string percent_display(double rate) {
  if (std::isinf(rate)) return "inf";
  return std::to_string(static_cast<long long>(std::llround(rate * 100.0))) +
         "%";
}

Report build_report(const ScoreTable* scores, const CooccurrenceTable* cooc,
                    const RealizationMeans* means, const StatsArtifact* stats,
                    const Diagnostics& diagnostics) {
  Report report;
  report.diagnostics = diagnostics;

  if (scores) {
    check_digest(report.manifest_digest, scores->manifest_digest,
                 "score table");
    if (has_metric(*scores, MetricKind::WER))
      report.wer_table = make_rate_table(*scores, MetricKind::WER);
    if (has_metric(*scores, MetricKind::PER)) {
      report.per_table = make_rate_table(*scores, MetricKind::PER);
      if (report.wer_table) report.reduction_by_system = per_reduction(*scores);
    }
  }
  if (cooc) {
    check_digest(report.manifest_digest, cooc->manifest_digest,
                 "co-occurrence table");
    report.cooccurrence = *cooc;
    report.normalized_rates = normalized_rates(*cooc);
  }
  if (means) report.realization_means = *means;
  if (stats) {
    check_digest(report.manifest_digest, stats->manifest_digest,
                 "stats artifact");
    report.stats = *stats;
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json rate_table_to_json(const RateTable& t) {
  nlohmann::json j;
  j["systems"] = t.systems;
  j["groups"] = t.groups;
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [key, stat] : t.cells) {
    nlohmann::json c = {{"mean", number_or_inf(stat.mean)}, {"n", stat.n}};
    if (stat.se) c["se"] = *stat.se;
    cells[key.first + "/" + key.second] = std::move(c);
  }
  j["cells"] = std::move(cells);
  nlohmann::json means = nlohmann::json::object();
  for (const auto& [group, mean] : t.column_means)
    means[group] = number_or_inf(mean);
  j["column_means"] = std::move(means);
  return j;
}

RateTable rate_table_from_json(const nlohmann::json& j) {
  RateTable t;
  t.systems = j.at("systems").get<std::vector<std::string>>();
  t.groups = j.at("groups").get<std::vector<std::string>>();
  for (const auto& [key, value] : j.at("cells").items()) {
    std::size_t slash = key.find('/');
    GroupStat stat;
    stat.mean = number_from(value.at("mean"));
    stat.n = value.at("n").get<int>();
    if (value.contains("se")) stat.se = value.at("se").get<double>();
    t.cells[{key.substr(0, slash), key.substr(slash + 1)}] = stat;
  }
  for (const auto& [group, mean] : j.at("column_means").items())
    t.column_means[group] = number_from(mean);
  return t;
}

std::string cooc_key_string(const CoocKey& key) {
  return key.group + "/" + key.system_id + "/" +
         std::string(marker_code(key.marker));
}

CoocKey cooc_key_parse(const std::string& key) {
  std::size_t second = key.rfind('/');
  std::size_t first = key.rfind('/', second - 1);
  auto marker = parse_marker(key.substr(second + 1));
  if (second == std::string::npos || first == std::string::npos || !marker)
    throw ParseError("bad marker-cell key \"" + key + "\"");
  return {key.substr(0, first), key.substr(first + 1, second - first - 1),
          *marker};
}

}  // namespace

namespace {

nlohmann::json report_to_json(const Report& report) {
  nlohmann::json j;
  j["manifest_digest"] = report.manifest_digest;

  j["wer_table"] = report.wer_table ? rate_table_to_json(*report.wer_table)
                                    : nlohmann::json(nullptr);
  j["per_table"] = report.per_table ? rate_table_to_json(*report.per_table)
                                    : nlohmann::json(nullptr);

  if (report.reduction_by_system) {
    nlohmann::json red = nlohmann::json::object();
    for (const auto& [system, value] : *report.reduction_by_system)
      red[system] = value ? nlohmann::json(*value) : nlohmann::json(nullptr);
    j["reduction_by_system"] = std::move(red);
  } else {
    j["reduction_by_system"] = nullptr;
  }

  if (report.realization_means) {
    nlohmann::json rm;
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [group, n] : report.realization_means->annotated_speakers) {
      nlohmann::json g;
      g["speakers"] = n;
      nlohmann::json m = nlohmann::json::object();
      for (Marker marker : kAllMarkers) {
        auto it = report.realization_means->means.find({group, marker});
        if (it != report.realization_means->means.end())
          m[std::string(marker_code(marker))] = it->second;
      }
      g["means"] = std::move(m);
      groups[group] = std::move(g);
    }
    rm["groups"] = std::move(groups);
    rm["notes"] = report.realization_means->notes;
    j["realization_means"] = std::move(rm);
  } else {
    j["realization_means"] = nullptr;
  }

  if (report.cooccurrence) {
    nlohmann::json cc;
    cc["manifest_digest"] = report.cooccurrence->manifest_digest;
    nlohmann::json cells = nlohmann::json::object();
    for (const auto& [key, cell] : report.cooccurrence->cells)
      cells[cooc_key_string(key)] = {{"overlap", cell.overlap},
                                     {"contexts", cell.contexts},
                                     {"realized", cell.realized},
                                     {"total_errors", cell.total_errors}};
    cc["cells"] = std::move(cells);
    nlohmann::json skipped = nlohmann::json::array();
    for (const SkippedWord& s : report.cooccurrence->skipped)
      skipped.push_back({{"utterance_id", s.utterance_id},
                         {"token_index", s.token_index},
                         {"word", s.word}});
    cc["skipped_words"] = std::move(skipped);
    j["cooccurrence"] = std::move(cc);
  } else {
    j["cooccurrence"] = nullptr;
  }

  if (report.normalized_rates) {
    nlohmann::json norm = nlohmann::json::object();
    for (const auto& [key, value] : *report.normalized_rates)
      norm[cooc_key_string(key)] =
          value ? nlohmann::json(*value) : nlohmann::json(nullptr);
    j["normalized_rates"] = std::move(norm);
  } else {
    j["normalized_rates"] = nullptr;
  }

  if (report.stats) {
    j["stats"] = nlohmann::json::parse(to_json_string(*report.stats));
  } else {
    j["stats"] = nullptr;
  }

  nlohmann::json diag;
  nlohmann::json oov = nlohmann::json::object();
  for (const auto& [system, tokens] : report.diagnostics.oov_by_system) {
    nlohmann::json list = nlohmann::json::array();
    for (const OovCount& t : tokens)
      list.push_back({{"token", t.token}, {"count", t.count}});
    oov[system] = std::move(list);
  }
  diag["oov_by_system"] = std::move(oov);
  nlohmann::json uncovered = nlohmann::json::array();
  for (const CoverageGap& gap : report.diagnostics.uncovered)
    uncovered.push_back({{"utterance_id", gap.utterance_id},
                         {"system_id", gap.system_id}});
  diag["uncovered"] = std::move(uncovered);
  nlohmann::json skipped = nlohmann::json::array();
  for (const SkippedWord& s : report.diagnostics.skipped_words)
    skipped.push_back({{"utterance_id", s.utterance_id},
                       {"token_index", s.token_index},
                       {"word", s.word}});
  diag["skipped_words"] = std::move(skipped);
  diag["warnings"] = report.diagnostics.warnings;
  j["diagnostics"] = std::move(diag);
  return j;
}

}  // namespace

Report report_from_json(std::string_view json) {
  nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed report JSON");
  Report report;
  try {
    report.manifest_digest = j.at("manifest_digest").get<std::string>();
    if (!j.at("wer_table").is_null())
      report.wer_table = rate_table_from_json(j.at("wer_table"));
    if (!j.at("per_table").is_null())
      report.per_table = rate_table_from_json(j.at("per_table"));
    if (!j.at("reduction_by_system").is_null()) {
      std::map<std::string, std::optional<double>> red;
      for (const auto& [system, value] : j.at("reduction_by_system").items())
        red[system] = value.is_null() ? std::optional<double>{}
                                      : std::optional<double>{value.get<double>()};
      report.reduction_by_system = std::move(red);
    }
    if (!j.at("realization_means").is_null()) {
      RealizationMeans means;
      for (const auto& [group, g] : j.at("realization_means").at("groups").items()) {
        means.annotated_speakers[group] = g.at("speakers").get<int>();
        for (const auto& [code, value] : g.at("means").items())
          means.means[{group, *parse_marker(code)}] = value.get<double>();
      }
      means.notes =
          j.at("realization_means").at("notes").get<std::vector<std::string>>();
      report.realization_means = std::move(means);
    }
    if (!j.at("cooccurrence").is_null()) {
      CooccurrenceTable table;
      const auto& cc = j.at("cooccurrence");
      table.manifest_digest = cc.at("manifest_digest").get<std::string>();
      for (const auto& [key, value] : cc.at("cells").items()) {
        CoocCell cell;
        cell.overlap = value.at("overlap").get<std::int64_t>();
        cell.contexts = value.at("contexts").get<std::int64_t>();
        cell.realized = value.at("realized").get<std::int64_t>();
        cell.total_errors = value.at("total_errors").get<std::int64_t>();
        table.cells[cooc_key_parse(key)] = cell;
      }
      for (const auto& s : cc.at("skipped_words"))
        table.skipped.push_back({s.at("utterance_id").get<std::string>(),
                                 s.at("token_index").get<std::size_t>(),
                                 s.at("word").get<std::string>()});
      report.cooccurrence = std::move(table);
    }
    if (!j.at("normalized_rates").is_null()) {
      std::map<CoocKey, std::optional<double>> norm;
      for (const auto& [key, value] : j.at("normalized_rates").items())
        norm[cooc_key_parse(key)] =
            value.is_null() ? std::optional<double>{}
                            : std::optional<double>{value.get<double>()};
      report.normalized_rates = std::move(norm);
    }
    if (!j.at("stats").is_null())
      report.stats = stats_from_json(j.at("stats").dump());

    const auto& diag = j.at("diagnostics");
    for (const auto& [system, list] : diag.at("oov_by_system").items()) {
      auto& tokens = report.diagnostics.oov_by_system[system];
      for (const auto& t : list)
        tokens.push_back({t.at("token").get<std::string>(),
                          t.at("count").get<std::int64_t>()});
    }
    for (const auto& gap : diag.at("uncovered"))
      report.diagnostics.uncovered.push_back(
          {gap.at("utterance_id").get<std::string>(),
           gap.at("system_id").get<std::string>()});
    for (const auto& s : diag.at("skipped_words"))
      report.diagnostics.skipped_words.push_back(
          {s.at("utterance_id").get<std::string>(),
           s.at("token_index").get<std::size_t>(),
           s.at("word").get<std::string>()});
    report.diagnostics.warnings =
        diag.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV bundle
// ---------------------------------------------------------------------------

namespace {

std::string rate_table_csv(const RateTable& t) {
  std::string out;
  std::vector<std::string> header = {"system"};
  header.insert(header.end(), t.groups.begin(), t.groups.end());
  out += csv_join(header);
  for (const std::string& system : t.systems) {
    std::vector<std::string> row = {system};
    for (const std::string& group : t.groups) {
      auto it = t.cells.find({group, system});
      row.push_back(it == t.cells.end()
                        ? "NA"
                        : std::to_string(static_cast<long long>(
                              std::llround(it->second.mean * 100.0))));
    }
    out += csv_join(row);
  }
  std::vector<std::string> mean_row = {"Mean"};
  for (const std::string& group : t.groups) {
    auto it = t.column_means.find(group);
    mean_row.push_back(it == t.column_means.end()
                           ? "NA"
                           : std::to_string(static_cast<long long>(
                                 std::llround(it->second * 100.0))));
  }
  out += csv_join(mean_row);
  return out;
}

std::string reduction_csv(
    const std::map<std::string, std::optional<double>>& reduction) {
  std::string out = csv_join({"system", "mean_reduction_percent"});
  for (const auto& [system, value] : reduction)
    out += csv_join({system, value ? std::to_string(static_cast<long long>(
                                         std::llround(*value * 100.0)))
                                   : "NA"});
  return out;
}

std::string realization_csv(const RealizationMeans& means) {
  std::vector<std::string> header = {"group", "speakers"};
  for (Marker marker : kAllMarkers)
    header.emplace_back(marker_code(marker));
  std::string out = csv_join(header);
  std::vector<std::string> groups;
  for (const auto& [group, _] : means.annotated_speakers) groups.push_back(group);
  for (const std::string& group : sort_groups(groups)) {
    std::vector<std::string> row = {group,
                                    std::to_string(means.annotated_speakers.at(group))};
    for (Marker marker : kAllMarkers) {
      auto it = means.means.find({group, marker});
      row.push_back(it == means.means.end() ? "NA" : fixed(it->second, 2));
    }
    out += csv_join(row);
  }
  return out;
}

std::string cooccurrence_csv(const CooccurrenceTable& table) {
  std::set<std::string> groups_set, systems_set;
  for (const auto& [key, _] : table.cells) {
    groups_set.insert(key.group);
    systems_set.insert(key.system_id);
  }
  std::vector<std::string> systems(systems_set.begin(), systems_set.end());
  std::vector<std::string> groups =
      sort_groups({groups_set.begin(), groups_set.end()});

  std::vector<std::string> header = {"group"};
  for (const std::string& system : systems) {
    for (Marker marker : kAllMarkers)
      header.push_back(system + ":" + std::string(marker_code(marker)));
    header.push_back(system + ":Err");
  }
  std::string out = csv_join(header);
  for (const std::string& group : groups) {
    std::vector<std::string> row = {group};
    for (const std::string& system : systems) {
      std::int64_t err = 0;
      for (Marker marker : kAllMarkers) {
        auto it = table.cells.find({group, system, marker});
        if (it == table.cells.end()) {
          row.push_back("NA");
          continue;
        }
        row.push_back(std::to_string(it->second.overlap));
        err = it->second.total_errors;
      }
      row.push_back(std::to_string(err));
    }
    out += csv_join(row);
  }
  return out;
}

std::string normalized_csv(
    const std::map<CoocKey, std::optional<double>>& rates) {
  std::string out = csv_join({"group", "system", "marker", "rate_percent"});
  for (const auto& [key, value] : rates)
    out += csv_join({key.group, key.system_id,
                     std::string(marker_code(key.marker)),
                     value ? fixed(*value * 100.0, 1) : "NA"});
  return out;
}

// ---------------------------------------------------------------------------
// Markdown
// ---------------------------------------------------------------------------

void md_rate_table(std::string& md, const std::string& title,
                   const RateTable& t) {
  md += "## " + title + "\n\n";
  md += "| System |";
  for (const std::string& group : t.groups) md += " " + group + " |";
  md += "\n|---|";
  for (std::size_t i = 0; i < t.groups.size(); ++i) md += "---|";
  md += "\n";
  for (const std::string& system : t.systems) {
    md += "| " + system + " |";
    for (const std::string& group : t.groups) {
      auto it = t.cells.find({group, system});
      md += " " + (it == t.cells.end() ? std::string("—")
                                       : percent_display(it->second.mean)) +
            " |";
    }
    md += "\n";
  }
  md += "| **Mean** |";
  for (const std::string& group : t.groups) {
    auto it = t.column_means.find(group);
    md += " " + (it == t.column_means.end() ? std::string("—")
                                            : percent_display(it->second)) +
          " |";
  }
  md += "\n\n";
}

std::string render_markdown(const Report& report) {
  std::string md;
  md += "# Transcription bias report\n\n";
  md += "Manifest digest: `" + report.manifest_digest + "`\n\n";

  if (report.wer_table) {
    md_rate_table(md, "Word error rate by group and system", *report.wer_table);
  } else {
    md += "## Word error rate by group and system\n\n(absent)\n\n";
  }
  if (report.per_table) {
    md_rate_table(md, "Phonetic error rate by group and system",
                  *report.per_table);
  } else {
    md += "## Phonetic error rate by group and system\n\n(absent)\n\n";
  }

  md += "## Mean PER reduction relative to WER\n\n";
  if (report.reduction_by_system) {
    md += "| System | Reduction |\n|---|---|\n";
    for (const auto& [system, value] : *report.reduction_by_system)
      md += "| " + system + " | " +
            (value ? percent_display(*value) : std::string("—")) + " |\n";
    md += "\n";
  } else {
    md += "(absent)\n\n";
  }

  md += "## Mean realized marker instances per speaker\n\n";
  if (report.realization_means) {
    md += "| Group | Speakers |";
    for (Marker marker : kAllMarkers)
      md += " " + std::string(marker_code(marker)) + " |";
    md += "\n|---|---|";
    for (std::size_t i = 0; i < kAllMarkers.size(); ++i) md += "---|";
    md += "\n";
    std::vector<std::string> groups;
    for (const auto& [group, _] : report.realization_means->annotated_speakers)
      groups.push_back(group);
    for (const std::string& group : sort_groups(groups)) {
      md += "| " + group + " | " +
            std::to_string(report.realization_means->annotated_speakers.at(group)) +
            " |";
      for (Marker marker : kAllMarkers) {
        auto it = report.realization_means->means.find({group, marker});
        md += " " +
              (it == report.realization_means->means.end()
                   ? std::string("—")
                   : fixed(it->second, 2)) +
              " |";
      }
      md += "\n";
    }
    for (const std::string& note : report.realization_means->notes)
      md += "\n_" + note + "_\n";
    md += "\n";
  } else {
    md += "(absent)\n\n";
  }

  md += "## Error overlap with realized markers\n\n";
  if (report.cooccurrence) {
    std::set<std::string> groups_set, systems_set;
    for (const auto& [key, _] : report.cooccurrence->cells) {
      groups_set.insert(key.group);
      systems_set.insert(key.system_id);
    }
    std::vector<std::string> groups =
        sort_groups({groups_set.begin(), groups_set.end()});
    for (const std::string& system : systems_set) {
      md += "### " + system + "\n\n| Group |";
      for (Marker marker : kAllMarkers)
        md += " " + std::string(marker_code(marker)) + " |";
      md += " Err |\n|---|";
      for (std::size_t i = 0; i <= kAllMarkers.size(); ++i) md += "---|";
      md += "\n";
      for (const std::string& group : groups) {
        md += "| " + group + " |";
        std::int64_t err = 0;
        for (Marker marker : kAllMarkers) {
          auto it = report.cooccurrence->cells.find({group, system, marker});
          if (it == report.cooccurrence->cells.end()) {
            md += " — |";
            continue;
          }
          md += " " + std::to_string(it->second.overlap) + " |";
          err = it->second.total_errors;
        }
        md += " " + std::to_string(err) + " |\n";
      }
      md += "\n";
    }
  } else {
    md += "(absent)\n\n";
  }

  md += "## Normalized error rates per marker context\n\n";
  if (report.normalized_rates) {
    std::set<std::string> groups_set, systems_set;
    std::set<Marker> with_contexts;
    for (const auto& [key, value] : *report.normalized_rates) {
      groups_set.insert(key.group);
      systems_set.insert(key.system_id);
      if (value) with_contexts.insert(key.marker);
    }
    std::vector<std::string> groups =
        sort_groups({groups_set.begin(), groups_set.end()});
    md += "| Group | System |";
    for (Marker marker : kAllMarkers)
      if (with_contexts.count(marker))
        md += " " + std::string(marker_code(marker)) + " |";
    md += "\n|---|---|";
    for (std::size_t i = 0; i < with_contexts.size(); ++i) md += "---|";
    md += "\n";
    for (const std::string& group : groups) {
      for (const std::string& system : systems_set) {
        md += "| " + group + " | " + system + " |";
        for (Marker marker : kAllMarkers) {
          if (!with_contexts.count(marker)) continue;
          auto it = report.normalized_rates->find({group, system, marker});
          if (it == report.normalized_rates->end() || !it->second)
            md += " n/a |";
          else
            md += " " + fixed(*it->second * 100.0, 1) + "% |";
        }
        md += "\n";
      }
    }
    md += "\nMarkers with no possible contexts anywhere are omitted; n/a "
          "means the cell has no contexts.\n\n";
  } else {
    md += "(absent)\n\n";
  }

  md += "## Statistical tests\n\n";
  if (report.stats) {
    const StatsArtifact& stats = *report.stats;
    md += "Significance threshold: " + fixed(stats.alpha, 3) + "\n\n";
    for (const LmmReport& lmm : stats.lmm) {
      md += "### Mixed-effects model (" +
            std::string(metric_name(lmm.metric)) + ")\n\n";
      md += "Random intercept per speaker; sigma_b^2 = " +
            fixed(lmm.fit.sigma_b2, 6) + ", sigma_e^2 = " +
            fixed(lmm.fit.sigma_e2, 6) +
            (lmm.fit.converged ? "" : " (did not converge)") + "\n\n";
      md += "| Coefficient | Estimate | SE | z | p | |\n|---|---|---|---|---|---|\n";
      for (std::size_t j = 0; j < lmm.fit.beta.size(); ++j) {
        md += "| " + lmm.fit.column_names[j] + " | " +
              fixed(lmm.fit.beta[j], 4) + " | " + fixed(lmm.fit.se[j], 4) +
              " |";
        const WaldRow* row = nullptr;
        for (const WaldRow& r : lmm.tests)
          if (r.coefficient == lmm.fit.column_names[j]) row = &r;
        if (row) {
          char z[32], p[32];
          std::snprintf(z, sizeof z, "%.3f", *row->result.z);
          std::snprintf(p, sizeof p, "%.4g", *row->result.p_two_sided);
          md += std::string(" ") + z + " | " + p + " | " +
                (row->significant ? "*" : "") + " |\n";
        } else {
          md += " — | — | |\n";
        }
      }
      md += "\n";
    }
    if (!stats.proportions.empty()) {
      md += "### Proportion tests (normalized overlap vs reference group)\n\n";
      md += "| System | Marker | Group | k/n | Ref k/n | z | p | h | |\n";
      md += "|---|---|---|---|---|---|---|---|---|\n";
      for (const ProportionRow& row : stats.proportions) {
        md += "| " + row.system_id + " | " +
              std::string(marker_code(row.marker)) + " | " + row.group +
              " | " + std::to_string(row.k1) + "/" + std::to_string(row.n1) +
              " | " + std::to_string(row.k2) + "/" + std::to_string(row.n2) +
              " | ";
        if (row.result.degenerate) {
          md += "degenerate | — | ";
        } else {
          char z[32], p[32];
          std::snprintf(z, sizeof z, "%.3f", *row.result.z);
          std::snprintf(p, sizeof p, "%.4g", *row.result.p_two_sided);
          md += std::string(z) + " | " + p + " | ";
        }
        md += (row.result.effect_size ? fixed(*row.result.effect_size, 3)
                                      : std::string("—")) +
              " | " + (row.significant ? "*" : "") + " |\n";
      }
      md += "\n";
    }
    for (const std::string& note : stats.notes) md += "_" + note + "_\n";
    md += "\n";
  } else {
    md += "(absent)\n\n";
  }

  md += "## Diagnostics\n\n";
  std::size_t oov_total = 0;
  for (const auto& [system, tokens] : report.diagnostics.oov_by_system)
    for (const OovCount& t : tokens) oov_total += t.count;
  md += "- OOV hypothesis tokens: " + std::to_string(oov_total) + "\n";
  for (const auto& [system, tokens] : report.diagnostics.oov_by_system) {
    if (tokens.empty()) continue;
    md += "  - " + system + ":";
    for (const OovCount& t : tokens)
      md += " " + t.token + " (x" + std::to_string(t.count) + ")";
    md += "\n";
  }
  md += "- Utterances without hypotheses: " +
        std::to_string(report.diagnostics.uncovered.size()) + "\n";
  for (const CoverageGap& gap : report.diagnostics.uncovered)
    md += "  - " + gap.utterance_id + " (" + gap.system_id + ")\n";
  md += "- Words skipped during context detection: " +
        std::to_string(report.diagnostics.skipped_words.size()) + "\n";
  for (const SkippedWord& s : report.diagnostics.skipped_words)
    md += "  - " + s.utterance_id + "[" + std::to_string(s.token_index) +
          "] \"" + s.word + "\"\n";
  if (!report.diagnostics.warnings.empty()) {
    md += "- Warnings:\n";
    for (const std::string& w : report.diagnostics.warnings)
      md += "  - " + w + "\n";
  }
  return md;
}

}  // namespace

std::vector<NamedFile> render(const Report& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return {{"report.json", report_to_json(report).dump(2) + "\n"}};
    case ReportFormat::Markdown:
      return {{"report.md", render_markdown(report)}};
    case ReportFormat::CsvBundle: {
      std::vector<NamedFile> files;
      if (report.wer_table)
        files.push_back({"tables/wer.csv", rate_table_csv(*report.wer_table)});
      if (report.per_table)
        files.push_back({"tables/per.csv", rate_table_csv(*report.per_table)});
      if (report.reduction_by_system)
        files.push_back(
            {"tables/reduction.csv", reduction_csv(*report.reduction_by_system)});
      if (report.realization_means)
        files.push_back({"tables/realization.csv",
                         realization_csv(*report.realization_means)});
      if (report.cooccurrence)
        files.push_back({"tables/cooccurrence.csv",
                         cooccurrence_csv(*report.cooccurrence)});
      if (report.normalized_rates)
        files.push_back(
            {"tables/normalized.csv", normalized_csv(*report.normalized_rates)});
      return files;
    }
  }
  return {};
}

void write_report_dir(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "tables");
  for (ReportFormat format :
       {ReportFormat::Json, ReportFormat::CsvBundle, ReportFormat::Markdown}) {
    for (const NamedFile& file : render(report, format)) {
      std::ofstream out(dir / file.path, std::ios::binary);
      if (!out) throw DataError("cannot write " + (dir / file.path).string());
      out << file.contents;
    }
  }
}

}  // namespace phoneval
