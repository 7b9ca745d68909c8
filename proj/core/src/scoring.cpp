#include "phoneval/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "phoneval/errors.hpp"
#include "phoneval/parallel.hpp"

namespace phoneval {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

std::optional<double> se_of(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return std::nullopt;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return sd / std::sqrt(static_cast<double>(xs.size()));
}

nlohmann::json rate_to_json(double rate) {
  if (std::isinf(rate)) return "inf";
  return rate;
}

double rate_from_json(const nlohmann::json& j) {
  if (j.is_string() && j.get<std::string>() == "inf")
    return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

}  // namespace

std::string_view metric_name(MetricKind m) {
  return m == MetricKind::WER ? "WER" : "PER";
}

void Tally::add(const AlignmentResult& r) {
  S += r.S;
  D += r.D;
  I += r.I;
  C += r.C;
  N += r.N;
}

const ReferenceUtterance* Corpus::reference(
    std::string_view utterance_id) const {
  for (const ReferenceUtterance& r : references)
    if (r.id == utterance_id) return &r;
  return nullptr;
}

std::vector<std::string> ScoreTable::systems() const {
  std::set<std::string> out;
  for (const auto& [key, _] : cells) out.insert(key.system_id);
  return {out.begin(), out.end()};
}

std::vector<std::string> ScoreTable::group_labels() const {
  std::set<std::string> out;
  for (const auto& [key, _] : groups) out.insert(key.group);
  return {out.begin(), out.end()};
}

CorpusLoad load_corpus(const std::filesystem::path& manifest_dir,
                       std::string_view word_tier,
                       std::string_view phone_tier) {
  CorpusLoad out;
  std::string speakers_csv = read_file(manifest_dir / "speakers.csv");
  std::string utterances_csv = read_file(manifest_dir / "utterances.csv");
  ManifestLoad loaded =
      load_manifest(speakers_csv, utterances_csv,
                    (manifest_dir / "speakers.csv").string(),
                    (manifest_dir / "utterances.csv").string());
  out.corpus.manifest = std::move(loaded.manifest);
  out.warnings = std::move(loaded.warnings);

  out.corpus.references.resize(out.corpus.manifest.utterances.size());
  for (std::size_t i = 0; i < out.corpus.manifest.utterances.size(); ++i) {
    const UtteranceEntry& entry = out.corpus.manifest.utterances[i];
    std::filesystem::path grid_path = entry.textgrid_path;
    if (grid_path.is_relative()) grid_path = manifest_dir / grid_path;
    TextGrid grid = parse_textgrid(read_file(grid_path), grid_path.string());
    out.corpus.references[i] =
        extract_reference(grid, word_tier, phone_tier, entry.id,
                          entry.speaker_id);
  }
  return out;
}

std::vector<std::string> utterance_tokens(const ReferenceUtterance& ref) {
  std::vector<std::string> tokens;
  tokens.reserve(ref.words.size());
  for (const TimedToken& word : ref.words) {
    auto normalized = normalize_tokens(word.label);
    if (normalized.size() == 1) {
      tokens.push_back(std::move(normalized[0]));
    } else {
      // Multi-token or empty labels keep a one-to-one slot so annotation
      // indices stay valid.
      std::string lowered;
      for (char c : word.label)
        lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(lowered));
    }
  }
  return tokens;
}

CorpusScores score_corpus(const Corpus& corpus,
                          const std::vector<Hypothesis>& hypotheses,
                          const Lexicon* lex, const ScoreOptions& options) {
  if (options.per && !lex)
    throw std::invalid_argument("score_corpus: PER requested without lexicon");

  // Resolve every hypothesis up front so errors surface before fan-out.
  struct Task {
    const Hypothesis* hyp;
    const UtteranceEntry* entry;
    const ReferenceUtterance* ref;
  };
  std::unordered_map<std::string, std::size_t> ref_index;
  for (std::size_t i = 0; i < corpus.manifest.utterances.size(); ++i)
    ref_index[corpus.manifest.utterances[i].id] = i;

  std::vector<Task> tasks;
  tasks.reserve(hypotheses.size());
  for (const Hypothesis& h : hypotheses) {
    auto it = ref_index.find(h.utterance_id);
    if (it == ref_index.end())
      throw DataError("hypothesis for unknown utterance \"" + h.utterance_id +
                      "\" (system " + h.system_id + ")");
    tasks.push_back({&h, &corpus.manifest.utterances[it->second],
                     &corpus.references[it->second]});
  }

  struct Slot {
    AlignmentResult wer;
    PerScore per;
    std::size_t tokens = 0;
  };
  std::vector<Slot> slots(tasks.size());

  parallel_for(tasks.size(), options.threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    std::vector<std::string> hyp_tokens = normalize_tokens(task.hyp->text);
    slots[i].tokens = hyp_tokens.size();
    if (options.wer)
      slots[i].wer = align(normalize_tokens(task.entry->reference_text),
                           hyp_tokens, options.costs);
    if (options.per)
      slots[i].per = score_per(*task.ref, hyp_tokens, *lex,
                               options.stress_mode, options.costs);
  });

  CorpusScores out;
  out.table.manifest_digest = corpus.manifest.digest;

  std::map<std::string, std::map<std::string, std::int64_t>> oov_counts;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& task = tasks[i];
    const std::string& speaker = task.entry->speaker_id;
    const std::string& system = task.hyp->system_id;
    if (options.wer)
      out.table.cells[{speaker, system, MetricKind::WER}].add(slots[i].wer);
    if (options.per) {
      out.table.cells[{speaker, system, MetricKind::PER}].add(
          slots[i].per.alignment);
      for (const std::string& token : slots[i].per.oov)
        ++oov_counts[system][token];
      out.derived_tokens += slots[i].per.derived_tokens;
    }
    out.hypothesis_tokens += slots[i].tokens;
  }
  for (auto& [key, tally] : out.table.cells) tally.finish();

  for (auto& [system, counts] : oov_counts) {
    auto& list = out.oov_by_system[system];
    for (auto& [token, count] : counts) list.push_back({token, count});
  }

  // Group rollups: mean of speaker rates within each ethnicity.
  std::map<GroupKey, std::vector<double>> group_rates;
  for (const auto& [key, tally] : out.table.cells) {
    const Speaker* speaker = corpus.manifest.speaker(key.speaker_id);
    group_rates[{speaker->ethnicity_label, key.system_id, key.metric}]
        .push_back(tally.rate);
  }
  for (const auto& [key, rates] : group_rates) {
    GroupStat stat;
    stat.n = static_cast<int>(rates.size());
    stat.mean = mean_of(rates);
    stat.se = se_of(rates, stat.mean);
    out.table.groups[key] = stat;
  }

  // Coverage: utterances with no hypothesis for a system that was seen.
  std::set<std::string> systems;
  for (const Hypothesis& h : hypotheses) systems.insert(h.system_id);
  std::set<std::pair<std::string, std::string>> covered;
  for (const Hypothesis& h : hypotheses)
    covered.emplace(h.utterance_id, h.system_id);
  for (const std::string& system : systems)
    for (const UtteranceEntry& entry : corpus.manifest.utterances)
      if (!covered.count({entry.id, system}))
        out.coverage.push_back({entry.id, system});
  if (hypotheses.empty())
    for (const UtteranceEntry& entry : corpus.manifest.utterances)
      out.coverage.push_back({entry.id, ""});
  std::sort(out.coverage.begin(), out.coverage.end());
  return out;
}

std::vector<WordAlignment> word_alignments(
    const Corpus& corpus, const std::vector<Hypothesis>& hypotheses,
    const Costs& costs, unsigned threads) {
  std::unordered_map<std::string, const ReferenceUtterance*> refs;
  for (const ReferenceUtterance& r : corpus.references) refs[r.id] = &r;

  std::vector<WordAlignment> out(hypotheses.size());
  parallel_for(hypotheses.size(), threads, [&](std::size_t i) {
    const Hypothesis& h = hypotheses[i];
    auto it = refs.find(h.utterance_id);
    if (it == refs.end())
      throw DataError("hypothesis for unknown utterance \"" + h.utterance_id +
                      "\" (system " + h.system_id + ")");
    out[i] = {h.utterance_id, h.system_id,
              align(utterance_tokens(*it->second), normalize_tokens(h.text),
                    costs)};
  });
  return out;
}

std::map<std::string, std::optional<double>> per_reduction(
    const ScoreTable& table) {
  std::map<std::string, std::vector<double>> reductions;
  std::set<std::string> systems;
  for (const auto& [key, tally] : table.cells) {
    systems.insert(key.system_id);
    if (key.metric != MetricKind::WER) continue;
    auto per_it = table.cells.find({key.speaker_id, key.system_id,
                                    MetricKind::PER});
    if (per_it == table.cells.end()) continue;
    double wer = tally.rate;
    double per = per_it->second.rate;
    if (wer <= 0.0 || !std::isfinite(wer) || !std::isfinite(per)) continue;
    reductions[key.system_id].push_back((wer - per) / wer);
  }
  std::map<std::string, std::optional<double>> out;
  for (const std::string& system : systems) {
    auto it = reductions.find(system);
    if (it == reductions.end() || it->second.empty())
      out[system] = std::nullopt;
    else
      out[system] = mean_of(it->second);
  }
  return out;
}

ScoreTable merge_score_tables(const ScoreTable& a, const ScoreTable& b) {
  if (a.manifest_digest != b.manifest_digest)
    throw DataError("score tables come from different manifests (" +
                    a.manifest_digest + " vs " + b.manifest_digest + ")");
  ScoreTable out = a;
  for (const auto& [key, tally] : b.cells) {
    if (!out.cells.emplace(key, tally).second)
      throw DataError("duplicate score cell " + key.speaker_id + "/" +
                      key.system_id + "/" + std::string(metric_name(key.metric)));
  }
  for (const auto& [key, stat] : b.groups) out.groups.emplace(key, stat);
  return out;
}

std::string to_json_string(const ScoreTable& table) {
  nlohmann::json j;
  j["manifest_digest"] = table.manifest_digest;
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& [key, tally] : table.cells) {
    std::string k = key.speaker_id + "/" + key.system_id + "/" +
                    std::string(metric_name(key.metric));
    cells[k] = {{"S", tally.S}, {"D", tally.D}, {"I", tally.I},
                {"C", tally.C}, {"N", tally.N}, {"rate", rate_to_json(tally.rate)}};
  }
  j["cells"] = std::move(cells);
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [key, stat] : table.groups) {
    std::string k = key.group + "/" + key.system_id + "/" +
                    std::string(metric_name(key.metric));
    nlohmann::json g = {{"mean", rate_to_json(stat.mean)}, {"n", stat.n}};
    if (stat.se) g["se"] = *stat.se;
    groups[k] = std::move(g);
  }
  j["groups"] = std::move(groups);
  return j.dump(2) + "\n";
}

namespace {

// Keys are "a/b/METRIC"; speaker and system ids must not contain '/'.
std::array<std::string, 3> split_key(const std::string& key) {
  std::size_t second = key.rfind('/');
  if (second == std::string::npos || second == 0)
    throw ParseError("bad score-table key \"" + key + "\"");
  std::size_t first = key.rfind('/', second - 1);
  if (first == std::string::npos)
    throw ParseError("bad score-table key \"" + key + "\"");
  return {key.substr(0, first), key.substr(first + 1, second - first - 1),
          key.substr(second + 1)};
}

MetricKind parse_metric(const std::string& name) {
  if (name == "WER") return MetricKind::WER;
  if (name == "PER") return MetricKind::PER;
  throw ParseError("unknown metric \"" + name + "\"");
}

}  // namespace

ScoreTable score_table_from_json(std::string_view json) {
  nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed score-table JSON");
  ScoreTable table;
  try {
    table.manifest_digest = j.at("manifest_digest").get<std::string>();
    for (const auto& [key, value] : j.at("cells").items()) {
      auto [speaker, system, metric] = split_key(key);
      Tally tally;
      tally.S = value.at("S").get<std::int64_t>();
      tally.D = value.at("D").get<std::int64_t>();
      tally.I = value.at("I").get<std::int64_t>();
      tally.C = value.at("C").get<std::int64_t>();
      tally.N = value.at("N").get<std::int64_t>();
      tally.rate = rate_from_json(value.at("rate"));
      table.cells[{speaker, system, parse_metric(metric)}] = tally;
    }
    for (const auto& [key, value] : j.at("groups").items()) {
      auto [group, system, metric] = split_key(key);
      GroupStat stat;
      stat.mean = rate_from_json(value.at("mean"));
      stat.n = value.at("n").get<int>();
      if (value.contains("se")) stat.se = value.at("se").get<double>();
      table.groups[{group, system, parse_metric(metric)}] = stat;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("score-table JSON: ") + e.what());
  }
  return table;
}

}  // namespace phoneval
