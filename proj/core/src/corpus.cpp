#include "phoneval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "phoneval/csv.hpp"
#include "phoneval/errors.hpp"

namespace phoneval {

namespace {

constexpr double kStraddleTolerance = 1e-3;  // 1 ms

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return out;
}

bool is_silence(const std::string& label) {
  return label.find_first_not_of(" \t") == std::string::npos;
}

EthnicityCode parse_ethnicity(std::string_view raw) {
  if (raw == "AA") return EthnicityCode::AA;
  if (raw == "CA") return EthnicityCode::CA;
  if (raw == "CX") return EthnicityCode::CX;
  if (raw == "YA") return EthnicityCode::YA;
  return EthnicityCode::Other;
}

void check_header(const CsvRow& row, const std::vector<std::string>& expected,
                  const std::string& filename) {
  if (row.fields != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) want += ',';
      want += expected[i];
    }
    throw ParseError(filename, row.line, "bad header, expected `" + want + "`");
  }
}

}  // namespace

std::string_view ethnicity_code_label(EthnicityCode code) {
  switch (code) {
    case EthnicityCode::AA: return "AA";
    case EthnicityCode::CA: return "CA";
    case EthnicityCode::CX: return "CX";
    case EthnicityCode::YA: return "YA";
    case EthnicityCode::Other: return "other";
  }
  return "other";
}

const Speaker* Manifest::speaker(std::string_view id) const {
  for (const Speaker& s : speakers)
    if (s.id == id) return &s;
  return nullptr;
}

const UtteranceEntry* Manifest::utterance(std::string_view id) const {
  for (const UtteranceEntry& u : utterances)
    if (u.id == id) return &u;
  return nullptr;
}

std::vector<Speaker> load_speakers(std::string_view csv,
                                   const std::string& filename,
                                   std::vector<std::string>* warnings) {
  auto rows = parse_csv(csv, filename);
  if (rows.empty()) throw ParseError(filename, 1, "empty speakers file");
  check_header(rows[0], {"speaker_id", "ethnicity", "gender", "age"}, filename);

  std::vector<Speaker> speakers;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.fields.size() != 4)
      throw ParseError(filename, row.line, "expected 4 fields");
    Speaker s;
    s.id = row.fields[0];
    if (s.id.empty()) throw ParseError(filename, row.line, "empty speaker_id");
    if (!seen.insert(s.id).second)
      throw DataError(filename + ": duplicate speaker_id \"" + s.id + "\"");
    s.ethnicity_label = row.fields[1];
    s.ethnicity = parse_ethnicity(s.ethnicity_label);
    if (s.ethnicity == EthnicityCode::Other && warnings)
      warnings->push_back(filename + ":" + std::to_string(row.line) +
                          ": unknown ethnicity code \"" + s.ethnicity_label +
                          "\" for speaker " + s.id + ", treated as other");
    s.gender_label = row.fields[2];
    s.gender = s.gender_label == "F"   ? GenderCode::F
               : s.gender_label == "M" ? GenderCode::M
                                       : GenderCode::Other;
    const std::string& age_str = row.fields[3];
    auto [ptr, ec] = std::from_chars(age_str.data(),
                                     age_str.data() + age_str.size(), s.age);
    if (ec != std::errc() || ptr != age_str.data() + age_str.size() ||
        s.age <= 0)
      throw ParseError(filename, row.line,
                       "bad age \"" + age_str + "\" for speaker " + s.id);
    speakers.push_back(std::move(s));
  }
  return speakers;
}

std::vector<UtteranceEntry> load_utterance_index(std::string_view csv,
                                                 const std::string& filename) {
  auto rows = parse_csv(csv, filename);
  if (rows.empty()) throw ParseError(filename, 1, "empty utterances file");
  check_header(rows[0],
               {"utterance_id", "speaker_id", "textgrid_path", "reference_text"},
               filename);
  std::vector<UtteranceEntry> entries;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.fields.size() != 4)
      throw ParseError(filename, row.line, "expected 4 fields");
    UtteranceEntry e{row.fields[0], row.fields[1], row.fields[2],
                     row.fields[3]};
    if (e.id.empty()) throw ParseError(filename, row.line, "empty utterance_id");
    if (!seen.insert(e.id).second)
      throw DataError(filename + ": duplicate utterance_id \"" + e.id + "\"");
    entries.push_back(std::move(e));
  }
  return entries;
}

ManifestLoad load_manifest(std::string_view speakers_csv,
                           std::string_view utterances_csv,
                           const std::string& speakers_file,
                           const std::string& utterances_file) {
  ManifestLoad out;
  out.manifest.speakers =
      load_speakers(speakers_csv, speakers_file, &out.warnings);
  out.manifest.utterances =
      load_utterance_index(utterances_csv, utterances_file);
  for (const UtteranceEntry& u : out.manifest.utterances)
    if (!out.manifest.speaker(u.speaker_id))
      throw DataError(utterances_file + ": utterance \"" + u.id +
                      "\" references unknown speaker \"" + u.speaker_id + "\"");
  out.manifest.digest = manifest_digest(speakers_csv, utterances_csv);
  return out;
}

std::vector<Hypothesis> load_hypotheses(std::string_view jsonl,
                                        const std::string& filename) {
  std::vector<Hypothesis> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view raw = jsonl.substr(start, end - start);
    ++line;
    start = end + 1;
    if (end == jsonl.size() && raw.empty()) break;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (raw.find_first_not_of(" \t") == std::string_view::npos) continue;

    nlohmann::json obj = nlohmann::json::parse(raw, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw ParseError(filename, line, "malformed JSON object");
    Hypothesis h;
    h.source_line = line;
    try {
      h.utterance_id = obj.at("utterance_id").get<std::string>();
      h.system_id = obj.at("system_id").get<std::string>();
      h.text = obj.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(filename, line, e.what());
    }
    if (!seen.emplace(h.utterance_id, h.system_id).second)
      throw DataError(filename + ":" + std::to_string(line) +
                      ": duplicate hypothesis for (" + h.utterance_id + ", " +
                      h.system_id + ")");
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<MarkerRealization> load_marker_annotations(
    std::string_view tsv, const std::string& filename) {
  std::vector<MarkerRealization> out;
  std::set<std::tuple<std::string, std::size_t, Marker>> seen;
  std::size_t line = 0;
  std::size_t start = 0;
  bool header_seen = false;
  while (start <= tsv.size()) {
    std::size_t end = tsv.find('\n', start);
    if (end == std::string_view::npos) end = tsv.size();
    std::string_view raw = tsv.substr(start, end - start);
    ++line;
    bool at_eof = end == tsv.size();
    start = end + 1;
    if (at_eof && raw.empty()) break;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (raw.empty()) continue;

    std::vector<std::string> fields;
    std::size_t f = 0;
    while (f <= raw.size()) {
      std::size_t tab = raw.find('\t', f);
      if (tab == std::string_view::npos) tab = raw.size();
      fields.emplace_back(raw.substr(f, tab - f));
      f = tab + 1;
    }
    if (!header_seen) {
      std::vector<std::string> expected = {"utterance_id", "token_index",
                                           "marker", "realized"};
      if (fields != expected)
        throw ParseError(filename, line,
                         "bad header, expected `utterance_id\ttoken_index\t"
                         "marker\trealized`");
      header_seen = true;
      continue;
    }
    if (fields.size() != 4)
      throw ParseError(filename, line, "expected 4 tab-separated fields");

    MarkerRealization rec;
    rec.utterance_id = fields[0];
    unsigned long idx = 0;
    auto [ptr, ec] =
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(),
                        idx);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size())
      throw ParseError(filename, line, "bad token_index \"" + fields[1] + "\"");
    rec.token_index = idx;
    auto marker = parse_marker(fields[2]);
    if (!marker)
      throw ParseError(filename, line, "unknown marker code \"" + fields[2] +
                                           "\"");
    rec.marker = *marker;
    if (fields[3] == "1")
      rec.realized = true;
    else if (fields[3] == "0")
      rec.realized = false;
    else
      throw ParseError(filename, line,
                       "realized must be 0 or 1, got \"" + fields[3] + "\"");
    if (!seen.emplace(rec.utterance_id, rec.token_index, rec.marker).second)
      throw DataError(filename + ":" + std::to_string(line) +
                      ": duplicate record for (" + rec.utterance_id + ", " +
                      std::to_string(rec.token_index) + ", " +
                      std::string(marker_code(rec.marker)) + ")");
    out.push_back(std::move(rec));
  }
  if (!header_seen) throw ParseError(filename, 1, "missing header row");
  return out;
}

ReferenceUtterance extract_reference(const TextGrid& grid,
                                     std::string_view word_tier,
                                     std::string_view phone_tier,
                                     std::string utterance_id,
                                     std::string speaker_id) {
  const Tier* words = find_tier(grid, word_tier);
  if (!words)
    throw DataError("utterance \"" + utterance_id + "\": no tier matching \"" +
                    std::string(word_tier) + "\"");
  const Tier* phones = find_tier(grid, phone_tier);
  if (!phones)
    throw DataError("utterance \"" + utterance_id + "\": no tier matching \"" +
                    std::string(phone_tier) + "\"");

  ReferenceUtterance ref;
  ref.id = std::move(utterance_id);
  ref.speaker_id = std::move(speaker_id);

  for (const Interval& iv : words->intervals) {
    if (is_silence(iv.label)) continue;
    ref.words.push_back({iv.label, iv.xmin, iv.xmax});
  }
  ref.word_phone_map.assign(ref.words.size(), {0, 0});
  std::vector<bool> started(ref.words.size(), false);

  // Phone intervals are sorted, so midpoints are strictly increasing and a
  // single forward scan over the words suffices.
  std::size_t w = 0;
  for (const Interval& iv : phones->intervals) {
    if (is_silence(iv.label)) continue;
    TimedToken phone{upper(iv.label), iv.xmin, iv.xmax};
    double mid = 0.5 * (iv.xmin + iv.xmax);

    while (w < ref.words.size() && ref.words[w].xmax <= mid) ++w;
    if (w >= ref.words.size() || mid < ref.words[w].xmin)
      throw DataError("utterance \"" + ref.id + "\": phone \"" + phone.label +
                      "\" at " + std::to_string(mid) +
                      "s lies outside every word");
    // Midpoint containment picks the word; the straddle check bounds how far
    // the phone may leak past that word's span.
    const TimedToken& word = ref.words[w];
    if (iv.xmin < word.xmin - kStraddleTolerance ||
        iv.xmax > word.xmax + kStraddleTolerance)
      throw DataError("utterance \"" + ref.id + "\": phone \"" + phone.label +
                      "\" straddles the boundary of word \"" + word.label +
                      "\" by more than 1 ms");
    if (!started[w]) {
      ref.word_phone_map[w] = {ref.phones.size(), ref.phones.size()};
      started[w] = true;
    }
    ref.word_phone_map[w].second = ref.phones.size() + 1;
    ref.phones.push_back(std::move(phone));
  }

  // Words with no phones get an empty range anchored after the previous
  // word's range, keeping the map contiguous and ordered.
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < ref.word_phone_map.size(); ++i) {
    if (!started[i]) {
      ref.word_phone_map[i] = {cursor, cursor};
    } else {
      cursor = ref.word_phone_map[i].second;
    }
  }
  return ref;
}

std::string manifest_digest(std::string_view speakers_csv,
                            std::string_view utterances_csv) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(speakers_csv);
  mix("\n");
  mix(utterances_csv);
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace phoneval
