#include "phoneval/markers.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "phoneval/arpabet.hpp"
#include "phoneval/errors.hpp"

namespace phoneval {

namespace {

bool in(std::string_view s, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

bool is_vowel(const std::string& p) { return is_arpabet_vowel(p); }
bool is_consonant(const std::string& p) {
  return !p.empty() && !is_arpabet_vowel(p);
}
bool is_diphthong(const std::string& p) {
  return in(p, {"AY", "AW", "OY", "EY", "OW"});
}
bool is_monophthong(const std::string& p) {
  return is_arpabet_vowel(p) && !is_diphthong(p);
}
// Voiced non-obstruent followers licence /ai/ monophthongization.
bool is_sonorant(const std::string& p) {
  return is_arpabet_vowel(p) || in(p, {"M", "N", "NG", "L", "R", "W", "Y"});
}

std::string join(const std::vector<std::string>& phones, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += phones[i];
  }
  return out;
}

}  // namespace

std::optional<std::string> marker_trigger(
    Marker marker, const std::vector<std::string>& p) {
  const std::size_t n = p.size();
  if (n == 0) return std::nullopt;
  switch (marker) {
    case Marker::LowBackMerger:
      for (std::size_t i = 0; i < n; ++i)
        if (p[i] == "AO") return p[i];
      return std::nullopt;

    case Marker::PreNasalMerger:
      for (std::size_t i = 0; i + 1 < n; ++i)
        if (in(p[i], {"IH", "EH"}) && in(p[i + 1], {"N", "M", "NG"}))
          return join(p, i, i + 2);
      return std::nullopt;

    case Marker::AyMonophthong:
      // Word-final /ai/, or /ai/ before a sonorant coda (time -> [ta:m]).
      // Pre-obstruent /ai/ is left out so the variable does not swallow
      // every "side"-shaped token that the final-stop variables target.
      for (std::size_t i = 0; i < n; ++i) {
        if (p[i] != "AY") continue;
        if (i + 1 == n) return p[i];
        if (is_sonorant(p[i + 1])) return join(p, i, i + 2);
      }
      return std::nullopt;

    case Marker::PostVocalicR:
      for (std::size_t i = 1; i < n; ++i) {
        if (p[i] == "R" && is_vowel(p[i - 1])) return join(p, i - 1, i + 1);
        if (p[i] == "ER") return p[i];
      }
      return std::nullopt;

    case Marker::ThStopping:
    case Marker::ThFronting:
      // Same contexts; stopping vs fronting is a property of the realization
      // annotation, not of the word.
      for (std::size_t i = 0; i < n; ++i)
        if (in(p[i], {"TH", "DH"})) return p[i];
      return std::nullopt;

    case Marker::ClusterReduction: {
      if (n < 2 || !is_consonant(p[n - 1]) || !is_consonant(p[n - 2]))
        return std::nullopt;
      std::size_t start = n - 2;
      while (start > 0 && is_consonant(p[start - 1])) --start;
      return join(p, start, n);
    }

    case Marker::FinalDevoicing:
      // Word-final voiced obstruent after a plain vowel. Final /d/ after a
      // diphthong or consonant belongs to the debuccalization variable
      // instead, keeping the two final-stop variables disjoint.
      if (in(p[n - 1], {"B", "G", "V", "Z", "ZH", "JH", "DH"}))
        return p[n - 1];
      if (p[n - 1] == "D" && n >= 2 && is_monophthong(p[n - 2]))
        return p[n - 1];
      return std::nullopt;

    case Marker::FinalDebuccalized:
      // Word-final /t d/ in a cluster (test) or after a diphthong (side).
      if (in(p[n - 1], {"T", "D"}) && n >= 2 &&
          (is_consonant(p[n - 2]) || is_diphthong(p[n - 2])))
        return join(p, n - 2, n);
      return std::nullopt;

    case Marker::PreLateralBack:
      for (std::size_t i = 0; i + 1 < n; ++i)
        if (in(p[i], {"UH", "UW", "AH", "OW"}) && p[i + 1] == "L")
          return join(p, i, i + 2);
      return std::nullopt;

    case Marker::PreLateralFront:
      for (std::size_t i = 0; i + 1 < n; ++i)
        if (in(p[i], {"IH", "IY"}) && p[i + 1] == "L") return join(p, i, i + 2);
      return std::nullopt;
  }
  return std::nullopt;
}

ContextScan detect_contexts(const ReferenceUtterance& ref, const Lexicon& lex) {
  ContextScan scan;
  std::vector<std::string> tokens = utterance_tokens(ref);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    std::vector<std::string> phones;
    const auto& variants = lex.entries();
    auto it = variants.find(tokens[t]);
    if (it != variants.end()) {
      phones = phone_labels(it->second.front().phones, /*strip_stress=*/true);
    } else {
      auto [begin, end] = ref.word_phone_map[t];
      for (std::size_t k = begin; k < end; ++k)
        phones.push_back(strip_stress_label(ref.phones[k].label));
    }
    if (phones.empty()) {
      scan.skipped.push_back({ref.id, t, tokens[t]});
      continue;
    }
    for (Marker marker : kAllMarkers)
      if (auto trigger = marker_trigger(marker, phones))
        scan.contexts.push_back({ref.id, t, marker, *trigger});
  }
  return scan;
}

CooccurrenceTable cooccurrence(const std::vector<WordAlignment>& alignments,
                               const std::vector<MarkerContext>& contexts,
                               const std::vector<SkippedWord>& skipped,
                               const std::vector<MarkerRealization>& realizations,
                               const Corpus& corpus, OverlapMode mode) {
  CooccurrenceTable table;
  table.manifest_digest = corpus.manifest.digest;
  table.skipped = skipped;
  std::sort(table.skipped.begin(), table.skipped.end());

  std::unordered_map<std::string, const ReferenceUtterance*> refs;
  for (const ReferenceUtterance& r : corpus.references) refs[r.id] = &r;

  auto key3 = [](std::string_view utt, std::size_t token, Marker marker) {
    return std::string(utt) + "\x1f" + std::to_string(token) + "\x1f" +
           std::string(marker_code(marker));
  };

  std::unordered_map<std::string, bool> realized_at;
  for (const MarkerRealization& rec : realizations) {
    auto it = refs.find(rec.utterance_id);
    if (it == refs.end())
      throw DataError("marker annotation references unknown utterance \"" +
                      rec.utterance_id + "\"");
    if (rec.token_index >= it->second->words.size())
      throw DataError("marker annotation (" + rec.utterance_id + ", " +
                      std::to_string(rec.token_index) + ", " +
                      std::string(marker_code(rec.marker)) +
                      ") has token_index out of range: utterance has " +
                      std::to_string(it->second->words.size()) + " words");
    realized_at[key3(rec.utterance_id, rec.token_index, rec.marker)] =
        rec.realized;
  }

  std::unordered_map<std::string, std::vector<const MarkerContext*>>
      contexts_by_utterance;
  for (const MarkerContext& ctx : contexts)
    contexts_by_utterance[ctx.utterance_id].push_back(&ctx);

  std::set<std::string> groups_seen, systems_seen;
  for (const WordAlignment& wa : alignments) {
    auto ref_it = refs.find(wa.utterance_id);
    if (ref_it == refs.end())
      throw DataError("alignment references unknown utterance \"" +
                      wa.utterance_id + "\"");
    const Speaker* speaker =
        corpus.manifest.speaker(ref_it->second->speaker_id);
    const std::string& group = speaker->ethnicity_label;
    groups_seen.insert(group);
    systems_seen.insert(wa.system_id);

    std::set<std::size_t> errored;
    for (const EditOp& op : wa.alignment.ops)
      if (op.kind == EditKind::Substitution || op.kind == EditKind::Deletion)
        errored.insert(*op.ref_index);

    auto ctx_it = contexts_by_utterance.find(wa.utterance_id);
    if (ctx_it != contexts_by_utterance.end()) {
      for (const MarkerContext* ctx : ctx_it->second) {
        CoocCell& cell = table.cells[{group, wa.system_id, ctx->marker}];
        cell.contexts += 1;
        auto real_it = realized_at.find(
            key3(ctx->utterance_id, ctx->token_index, ctx->marker));
        bool realized = real_it != realized_at.end() && real_it->second;
        if (realized) cell.realized += 1;
        bool counts = mode == OverlapMode::RealizedOnly
                          ? realized
                          : true;
        if (counts && errored.count(ctx->token_index)) cell.overlap += 1;
      }
    }
  }

  std::map<std::pair<std::string, std::string>, std::int64_t> errors;
  for (const WordAlignment& wa : alignments) {
    const ReferenceUtterance* ref = refs.at(wa.utterance_id);
    const Speaker* speaker = corpus.manifest.speaker(ref->speaker_id);
    errors[{speaker->ethnicity_label, wa.system_id}] +=
        wa.alignment.errors();
  }

  // Materialize the full group x system x marker matrix so not-applicable
  // cells are visible downstream.
  for (const std::string& group : groups_seen)
    for (const std::string& system : systems_seen)
      for (Marker marker : kAllMarkers) {
        CoocCell& cell = table.cells[{group, system, marker}];
        cell.total_errors = errors[{group, system}];
      }
  return table;
}

std::map<CoocKey, std::optional<double>> normalized_rates(
    const CooccurrenceTable& table) {
  std::map<CoocKey, std::optional<double>> out;
  for (const auto& [key, cell] : table.cells) {
    if (cell.contexts > 0)
      out[key] = static_cast<double>(cell.overlap) /
                 static_cast<double>(cell.contexts);
    else
      out[key] = std::nullopt;
  }
  return out;
}

RealizationMeans realization_means(
    const std::vector<MarkerRealization>& realizations,
    const Manifest& manifest) {
  RealizationMeans out;

  std::unordered_map<std::string, const Speaker*> speaker_of_utterance;
  for (const UtteranceEntry& u : manifest.utterances)
    speaker_of_utterance[u.id] = manifest.speaker(u.speaker_id);

  std::set<std::string> annotated;  // speaker ids with any record
  std::map<std::pair<std::string, Marker>, std::int64_t> realized_counts;
  for (const MarkerRealization& rec : realizations) {
    auto it = speaker_of_utterance.find(rec.utterance_id);
    if (it == speaker_of_utterance.end())
      throw DataError("marker annotation references unknown utterance \"" +
                      rec.utterance_id + "\"");
    const Speaker* speaker = it->second;
    annotated.insert(speaker->id);
    if (rec.realized)
      ++realized_counts[{speaker->ethnicity_label, rec.marker}];
  }

  std::map<std::string, int> annotated_by_group;
  std::set<std::string> all_groups;
  for (const Speaker& s : manifest.speakers) {
    all_groups.insert(s.ethnicity_label);
    if (annotated.count(s.id)) ++annotated_by_group[s.ethnicity_label];
  }

  for (const std::string& group : all_groups) {
    auto it = annotated_by_group.find(group);
    if (it == annotated_by_group.end()) {
      out.notes.push_back("group " + group +
                          " has no annotated speakers; omitted");
      continue;
    }
    out.annotated_speakers[group] = it->second;
    for (Marker marker : kAllMarkers) {
      auto count_it = realized_counts.find({group, marker});
      std::int64_t count =
          count_it == realized_counts.end() ? 0 : count_it->second;
      out.means[{group, marker}] =
          static_cast<double>(count) / static_cast<double>(it->second);
    }
  }
  return out;
}

std::string to_json_string(const CooccurrenceTable& table,
                           const RealizationMeans& means) {
  nlohmann::json j;
  j["manifest_digest"] = table.manifest_digest;
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [key, cell] : table.cells) {
    std::string k = key.group + "/" + key.system_id + "/" +
                    std::string(marker_code(key.marker));
    cells[k] = {{"overlap", cell.overlap},
                {"contexts", cell.contexts},
                {"realized", cell.realized},
                {"total_errors", cell.total_errors}};
  }
  j["cells"] = std::move(cells);

  nlohmann::json norm = nlohmann::json::object();
  for (const auto& [key, value] : normalized_rates(table)) {
    std::string k = key.group + "/" + key.system_id + "/" +
                    std::string(marker_code(key.marker));
    if (value)
      norm[k] = *value;
    else
      norm[k] = nullptr;
  }
  j["normalized"] = std::move(norm);

  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [group, n] : means.annotated_speakers) {
    nlohmann::json g;
    g["speakers"] = n;
    nlohmann::json m = nlohmann::json::object();
    for (Marker marker : kAllMarkers) {
      auto it = means.means.find({group, marker});
      if (it != means.means.end())
        m[std::string(marker_code(marker))] = it->second;
    }
    g["means"] = std::move(m);
    groups[group] = std::move(g);
  }
  j["realization_means"] = std::move(groups);
  j["realization_notes"] = means.notes;

  nlohmann::json skipped = nlohmann::json::array();
  for (const SkippedWord& s : table.skipped)
    skipped.push_back({{"utterance_id", s.utterance_id},
                       {"token_index", s.token_index},
                       {"word", s.word}});
  j["skipped_words"] = std::move(skipped);
  return j.dump(2) + "\n";
}

void cooccurrence_from_json(std::string_view json, CooccurrenceTable& table,
                            RealizationMeans& means) {
  nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed co-occurrence JSON");
  table = CooccurrenceTable{};
  means = RealizationMeans{};
  try {
    table.manifest_digest = j.at("manifest_digest").get<std::string>();
    for (const auto& [key, value] : j.at("cells").items()) {
      std::size_t second = key.rfind('/');
      std::size_t first = key.rfind('/', second - 1);
      if (second == std::string::npos || first == std::string::npos)
        throw ParseError("bad co-occurrence key \"" + key + "\"");
      auto marker = parse_marker(key.substr(second + 1));
      if (!marker) throw ParseError("bad marker in key \"" + key + "\"");
      CoocCell cell;
      cell.overlap = value.at("overlap").get<std::int64_t>();
      cell.contexts = value.at("contexts").get<std::int64_t>();
      cell.realized = value.at("realized").get<std::int64_t>();
      cell.total_errors = value.at("total_errors").get<std::int64_t>();
      table.cells[{key.substr(0, first),
                   key.substr(first + 1, second - first - 1), *marker}] = cell;
    }
    for (const auto& [group, g] : j.at("realization_means").items()) {
      means.annotated_speakers[group] = g.at("speakers").get<int>();
      for (const auto& [code, value] : g.at("means").items()) {
        auto marker = parse_marker(code);
        if (!marker) throw ParseError("bad marker code \"" + code + "\"");
        means.means[{group, *marker}] = value.get<double>();
      }
    }
    for (const auto& note : j.at("realization_notes"))
      means.notes.push_back(note.get<std::string>());
    for (const auto& s : j.at("skipped_words"))
      table.skipped.push_back({s.at("utterance_id").get<std::string>(),
                               s.at("token_index").get<std::size_t>(),
                               s.at("word").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("co-occurrence JSON: ") + e.what());
  }
}

}  // namespace phoneval
