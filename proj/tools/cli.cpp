#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "phoneval/errors.hpp"
#include "phoneval/markers.hpp"
#include "phoneval/report.hpp"
#include "phoneval/scoring.hpp"
#include "phoneval/stats.hpp"

namespace fs = std::filesystem;

namespace phoneval::cli {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
}

Costs resolve_costs(const RunConfig& config) {
  Costs costs = config.cost_preset == "unit" ? Costs::unit() : Costs::sclite();
  if (config.cost_sub >= 0) costs.substitution = config.cost_sub;
  if (config.cost_del >= 0) costs.deletion = config.cost_del;
  if (config.cost_ins >= 0) costs.insertion = config.cost_ins;
  return costs;
}

StressMode resolve_stress(const RunConfig& config) {
  return config.stress_mode == "keep" ? StressMode::Keep : StressMode::Strip;
}

/// Everything a stage might need, loaded lazily so `report` does not parse
/// TextGrids it never uses.
struct Context {
  RunConfig config;
  std::string subcommand;

  std::optional<CorpusLoad> corpus_;
  std::optional<std::vector<Hypothesis>> hypotheses_;
  std::optional<Lexicon> lexicon_;

  const Corpus& corpus() {
    if (!corpus_)
      corpus_ = load_corpus(config.manifest_dir, config.word_tier,
                            config.phone_tier);
    return corpus_->corpus;
  }

  const std::vector<std::string>& corpus_warnings() {
    corpus();
    return corpus_->warnings;
  }

  const std::vector<Hypothesis>& hypotheses() {
    if (!hypotheses_) {
      hypotheses_.emplace();
      std::set<std::pair<std::string, std::string>> seen;
      for (const std::string& path : config.hyp_paths) {
        auto loaded = load_hypotheses(read_file(path), path);
        for (Hypothesis& h : loaded) {
          if (!corpus().manifest.utterance(h.utterance_id))
            throw DataError(path + ":" + std::to_string(h.source_line) +
                            ": hypothesis references unknown utterance \"" +
                            h.utterance_id + "\" (system " + h.system_id +
                            ")");
          if (!seen.emplace(h.utterance_id, h.system_id).second)
            throw DataError(path + ":" + std::to_string(h.source_line) +
                            ": duplicate hypothesis for (" + h.utterance_id +
                            ", " + h.system_id + ") across files");
          hypotheses_->push_back(std::move(h));
        }
      }
    }
    return *hypotheses_;
  }

  const Lexicon& lexicon() {
    if (!lexicon_) {
      Lexicon base = parse_dictionary(read_file(config.dict_path),
                                      config.dict_path);
      if (!config.overlay_path.empty()) {
        Lexicon regional = parse_dictionary(read_file(config.overlay_path),
                                            config.overlay_path);
        lexicon_ = overlay(base, regional);
      } else {
        lexicon_ = std::move(base);
      }
    }
    return *lexicon_;
  }

  fs::path out(const std::string& name) const {
    return fs::path(config.out_dir) / name;
  }
};

void emit_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

// --- stages ---------------------------------------------------------------

void stage_score(Context& ctx) {
  ScoreOptions options;
  options.wer = true;
  options.per = false;
  options.costs = resolve_costs(ctx.config);
  options.threads = ctx.config.threads;
  CorpusScores scores =
      score_corpus(ctx.corpus(), ctx.hypotheses(), nullptr, options);

  nlohmann::json j;
  j["table"] = nlohmann::json::parse(to_json_string(scores.table));
  nlohmann::json coverage = nlohmann::json::array();
  for (const CoverageGap& gap : scores.coverage)
    coverage.push_back({{"utterance_id", gap.utterance_id},
                        {"system_id", gap.system_id}});
  j["coverage"] = std::move(coverage);
  j["warnings"] = ctx.corpus_warnings();
  write_file(ctx.out("wer.json"), j.dump(2) + "\n");
  emit_warnings(ctx.corpus_warnings());
}

void stage_per(Context& ctx) {
  ScoreOptions options;
  options.wer = false;
  options.per = true;
  options.stress_mode = resolve_stress(ctx.config);
  options.costs = resolve_costs(ctx.config);
  options.threads = ctx.config.threads;
  CorpusScores scores =
      score_corpus(ctx.corpus(), ctx.hypotheses(), &ctx.lexicon(), options);

  std::vector<std::string> warnings;
  std::size_t oov_total = 0;
  for (const auto& [system, tokens] : scores.oov_by_system)
    for (const OovCount& t : tokens)
      oov_total += static_cast<std::size_t>(t.count);
  if (scores.hypothesis_tokens > 0 &&
      static_cast<double>(oov_total) /
              static_cast<double>(scores.hypothesis_tokens) >
          0.05)
    warnings.push_back("OOV rate above 5% of hypothesis tokens (" +
                       std::to_string(oov_total) + "/" +
                       std::to_string(scores.hypothesis_tokens) + ")");

  nlohmann::json j;
  j["table"] = nlohmann::json::parse(to_json_string(scores.table));
  nlohmann::json coverage = nlohmann::json::array();
  for (const CoverageGap& gap : scores.coverage)
    coverage.push_back({{"utterance_id", gap.utterance_id},
                        {"system_id", gap.system_id}});
  j["coverage"] = std::move(coverage);
  nlohmann::json oov = nlohmann::json::object();
  for (const auto& [system, tokens] : scores.oov_by_system) {
    nlohmann::json list = nlohmann::json::array();
    for (const OovCount& t : tokens)
      list.push_back({{"token", t.token}, {"count", t.count}});
    oov[system] = std::move(list);
  }
  j["oov"] = std::move(oov);
  j["derived_tokens"] = scores.derived_tokens;
  j["hypothesis_tokens"] = scores.hypothesis_tokens;
  j["warnings"] = warnings;
  write_file(ctx.out("per.json"), j.dump(2) + "\n");
  emit_warnings(warnings);
}

void stage_markers(Context& ctx) {
  const Corpus& corpus = ctx.corpus();
  std::vector<MarkerRealization> realizations;
  std::vector<std::string> warnings;
  if (!ctx.config.markers_path.empty()) {
    realizations = load_marker_annotations(read_file(ctx.config.markers_path),
                                           ctx.config.markers_path);
    bool any_realized = false;
    for (const MarkerRealization& r : realizations)
      if (r.realized) any_realized = true;
    if (!realizations.empty() && !any_realized)
      warnings.push_back("annotation file has zero realized records");
  } else if (!ctx.config.context_overlap) {
    warnings.push_back(
        "no marker annotations given: overlaps count realized tokens and "
        "will all be zero");
  }

  ContextScan scan;
  for (const ReferenceUtterance& ref : corpus.references) {
    ContextScan s = detect_contexts(ref, ctx.lexicon());
    scan.contexts.insert(scan.contexts.end(), s.contexts.begin(),
                         s.contexts.end());
    scan.skipped.insert(scan.skipped.end(), s.skipped.begin(),
                        s.skipped.end());
  }

  auto alignments = word_alignments(corpus, ctx.hypotheses(),
                                    resolve_costs(ctx.config),
                                    ctx.config.threads);
  CooccurrenceTable table =
      cooccurrence(alignments, scan.contexts, scan.skipped, realizations,
                   corpus,
                   ctx.config.context_overlap ? OverlapMode::AnyContext
                                              : OverlapMode::RealizedOnly);
  RealizationMeans means = realization_means(realizations, corpus.manifest);

  nlohmann::json j = nlohmann::json::parse(to_json_string(table, means));
  j["warnings"] = warnings;
  write_file(ctx.out("markers.json"), j.dump(2) + "\n");
  emit_warnings(warnings);
}

struct Artifacts {
  std::optional<ScoreTable> scores;  // merged WER + PER
  std::optional<CooccurrenceTable> cooc;
  std::optional<RealizationMeans> means;
  std::optional<StatsArtifact> stats;
  Diagnostics diagnostics;
};

Artifacts read_artifacts(const Context& ctx) {
  Artifacts art;
  auto read_score = [&art](const fs::path& path) {
    if (!fs::exists(path)) return;
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    ScoreTable table = score_table_from_json(j.at("table").dump());
    art.scores = art.scores ? merge_score_tables(*art.scores, table) : table;
    for (const auto& gap : j.at("coverage"))
      art.diagnostics.uncovered.push_back(
          {gap.at("utterance_id").get<std::string>(),
           gap.at("system_id").get<std::string>()});
    for (const auto& w : j.at("warnings"))
      art.diagnostics.warnings.push_back(w.get<std::string>());
    if (j.contains("oov"))
      for (const auto& [system, list] : j.at("oov").items()) {
        auto& tokens = art.diagnostics.oov_by_system[system];
        for (const auto& t : list)
          tokens.push_back({t.at("token").get<std::string>(),
                            t.at("count").get<std::int64_t>()});
      }
  };
  read_score(ctx.out("wer.json"));
  read_score(ctx.out("per.json"));

  // Coverage gaps repeat across wer.json and per.json; dedupe.
  std::sort(art.diagnostics.uncovered.begin(), art.diagnostics.uncovered.end());
  art.diagnostics.uncovered.erase(
      std::unique(art.diagnostics.uncovered.begin(),
                  art.diagnostics.uncovered.end()),
      art.diagnostics.uncovered.end());

  if (fs::exists(ctx.out("markers.json"))) {
    CooccurrenceTable table;
    RealizationMeans means;
    std::string text = read_file(ctx.out("markers.json"));
    cooccurrence_from_json(text, table, means);
    nlohmann::json j = nlohmann::json::parse(text);
    for (const auto& w : j.at("warnings"))
      art.diagnostics.warnings.push_back(w.get<std::string>());
    art.diagnostics.skipped_words = table.skipped;
    art.cooc = std::move(table);
    art.means = std::move(means);
  }
  if (fs::exists(ctx.out("stats.json")))
    art.stats = stats_from_json(read_file(ctx.out("stats.json")));
  return art;
}

void stage_stats(Context& ctx) {
  Artifacts art = read_artifacts(ctx);
  if (!art.scores)
    throw DataError("stats: no score artifacts in " + ctx.config.out_dir +
                    " (run `score` and/or `per` first)");
  // The manifest is re-read to map speakers to groups; its digest must match
  // the artifacts being analyzed.
  const Manifest& manifest = ctx.corpus().manifest;
  if (manifest.digest != art.scores->manifest_digest)
    throw DataError("stats: score artifacts come from manifest " +
                    art.scores->manifest_digest + " but --manifest has " +
                    manifest.digest);

  StatsOptions options;
  options.alpha = ctx.config.alpha;
  options.lmm_wer = ctx.config.lmm_metric != "per";
  options.lmm_per = ctx.config.lmm_metric != "wer";
  options.ref_group = ctx.config.ref_group;
  options.ref_system = ctx.config.ref_system;
  StatsArtifact stats = compute_stats(
      *art.scores, art.cooc ? &*art.cooc : nullptr, manifest, options);
  write_file(ctx.out("stats.json"), to_json_string(stats));
}

void stage_report(Context& ctx) {
  Artifacts art = read_artifacts(ctx);
  if (!art.scores && !art.cooc && !art.stats)
    throw DataError("report: no artifacts in " + ctx.config.out_dir);
  std::sort(art.diagnostics.warnings.begin(), art.diagnostics.warnings.end());
  art.diagnostics.warnings.erase(
      std::unique(art.diagnostics.warnings.begin(),
                  art.diagnostics.warnings.end()),
      art.diagnostics.warnings.end());
  Report report = build_report(art.scores ? &*art.scores : nullptr,
                               art.cooc ? &*art.cooc : nullptr,
                               art.means ? &*art.means : nullptr,
                               art.stats ? &*art.stats : nullptr,
                               art.diagnostics);
  write_report_dir(report, ctx.config.out_dir);
}

// --- config file and argument plumbing -------------------------------------

void apply_config_file(const std::string& path, RunConfig& config) {
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ParseError(path, 0, "config file is not a JSON object");
  auto get_string = [&j](const char* key, std::string& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
  };
  get_string("manifest", config.manifest_dir);
  get_string("dict", config.dict_path);
  get_string("overlay", config.overlay_path);
  get_string("markers", config.markers_path);
  get_string("out", config.out_dir);
  get_string("word_tier", config.word_tier);
  get_string("phone_tier", config.phone_tier);
  get_string("stress_mode", config.stress_mode);
  get_string("cost_preset", config.cost_preset);
  get_string("lmm_metric", config.lmm_metric);
  get_string("ref_group", config.ref_group);
  get_string("ref_system", config.ref_system);
  if (j.contains("hyp")) {
    config.hyp_paths.clear();
    if (j.at("hyp").is_string())
      config.hyp_paths.push_back(j.at("hyp").get<std::string>());
    else
      for (const auto& p : j.at("hyp"))
        config.hyp_paths.push_back(p.get<std::string>());
  }
  if (j.contains("cost_sub")) config.cost_sub = j.at("cost_sub").get<int>();
  if (j.contains("cost_del")) config.cost_del = j.at("cost_del").get<int>();
  if (j.contains("cost_ins")) config.cost_ins = j.at("cost_ins").get<int>();
  if (j.contains("alpha")) config.alpha = j.at("alpha").get<double>();
  if (j.contains("threads")) config.threads = j.at("threads").get<unsigned>();
  if (j.contains("context_overlap"))
    config.context_overlap = j.at("context_overlap").get<bool>();
}

}  // namespace

std::vector<Diagnostic> validate(const RunConfig& config,
                                 const std::string& subcommand) {
  std::vector<Diagnostic> out;
  auto fatal = [&out](const std::string& m) { out.push_back({true, m}); };
  auto warn = [&out](const std::string& m) { out.push_back({false, m}); };

  bool needs_corpus = subcommand != "report";
  bool needs_hyps = subcommand == "score" || subcommand == "per" ||
                    subcommand == "markers" || subcommand == "all";
  bool needs_dict = subcommand == "per" || subcommand == "markers";

  if (needs_corpus) {
    if (config.manifest_dir.empty()) {
      fatal("--manifest is required");
    } else {
      if (!fs::exists(fs::path(config.manifest_dir) / "speakers.csv"))
        fatal("missing " +
              (fs::path(config.manifest_dir) / "speakers.csv").string());
      if (!fs::exists(fs::path(config.manifest_dir) / "utterances.csv"))
        fatal("missing " +
              (fs::path(config.manifest_dir) / "utterances.csv").string());
    }
  }
  if (needs_hyps) {
    if (config.hyp_paths.empty()) fatal("--hyp is required");
    for (const std::string& path : config.hyp_paths)
      if (!fs::exists(path)) fatal("hypothesis file not found: " + path);
  }
  if (needs_dict && config.dict_path.empty())
    fatal("--dict is required for `" + subcommand + "`");
  if (!config.dict_path.empty() && !fs::exists(config.dict_path))
    fatal("dictionary not found: " + config.dict_path);
  if (!config.overlay_path.empty() && !fs::exists(config.overlay_path))
    fatal("overlay dictionary not found: " + config.overlay_path);
  if (subcommand == "all" && config.dict_path.empty())
    warn("no --dict: PER and marker analysis will be skipped");

  if (!config.markers_path.empty()) {
    if (!fs::exists(config.markers_path)) {
      fatal("marker annotations not found: " + config.markers_path);
    } else {
      try {
        auto records = load_marker_annotations(read_file(config.markers_path),
                                               config.markers_path);
        bool any = false;
        for (const auto& r : records) any = any || r.realized;
        if (!records.empty() && !any)
          warn("annotation file has zero realized records");
      } catch (const std::exception&) {
        // Parsing problems surface as data errors in the stage itself.
      }
    }
  }

  if (config.stress_mode != "strip" && config.stress_mode != "keep")
    fatal("--stress must be strip or keep");
  if (config.cost_preset != "sclite" && config.cost_preset != "unit")
    fatal("--costs must be sclite or unit");
  if (config.lmm_metric != "wer" && config.lmm_metric != "per" &&
      config.lmm_metric != "both")
    fatal("--lmm-metric must be wer, per or both");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    fatal("--alpha must be in (0, 1)");

  if (subcommand == "stats" || subcommand == "report") {
    fs::path out_dir = config.out_dir;
    if (subcommand == "stats" && !fs::exists(out_dir / "wer.json") &&
        !fs::exists(out_dir / "per.json"))
      fatal("stats needs wer.json or per.json under " + config.out_dir);
  }
  return out;
}

int run(int argc, const char* const* argv) {
  CLI::App app{
      "phoneval: scores ASR transcripts against phonetically annotated "
      "corpora and cross-references errors with sociophonetic variables"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path;

  std::vector<CLI::App*> subs;
  for (const char* name : {"score", "per", "markers", "stats", "report",
                           "all"}) {
    static const std::map<std::string, std::string> descriptions = {
        {"score", "word error rates -> out/wer.json"},
        {"per", "phone error rates via the dictionary -> out/per.json"},
        {"markers", "marker contexts and error co-occurrence -> out/markers.json"},
        {"stats", "mixed-effects model and proportion tests -> out/stats.json"},
        {"report", "assemble report.json, report.md and tables/ from artifacts"},
        {"all", "run every stage in order"},
    };
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    sub->add_option("--config", config_path, "JSON config file; flags override");
    sub->add_option("--manifest", config.manifest_dir,
                    "directory with speakers.csv and utterances.csv");
    sub->add_option("--dict", config.dict_path, "pronunciation dictionary");
    sub->add_option("--overlay", config.overlay_path,
                    "regional overlay dictionary");
    sub->add_option("--hyp", config.hyp_paths, "hypothesis JSONL file(s)");
    sub->add_option("--markers", config.markers_path,
                    "marker realization TSV");
    sub->add_option("--out", config.out_dir, "output directory");
    sub->add_option("--word-tier", config.word_tier, "word tier aliases");
    sub->add_option("--phone-tier", config.phone_tier, "phone tier aliases");
    sub->add_option("--stress", config.stress_mode, "strip|keep");
    sub->add_option("--costs", config.cost_preset, "sclite|unit");
    sub->add_option("--cost-sub", config.cost_sub, "substitution cost");
    sub->add_option("--cost-del", config.cost_del, "deletion cost");
    sub->add_option("--cost-ins", config.cost_ins, "insertion cost");
    sub->add_option("--alpha", config.alpha, "significance threshold");
    sub->add_option("--threads", config.threads, "worker threads (0 = auto)");
    sub->add_option("--lmm-metric", config.lmm_metric, "wer|per|both");
    sub->add_option("--ref-group", config.ref_group,
                    "reference ethnicity for contrasts");
    sub->add_option("--ref-system", config.ref_system, "reference system");
    sub->add_flag("--context-overlap", config.context_overlap,
                  "count any errored context, not only realized tokens");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  CLI::App* active = app.get_subcommands().front();
  const std::string subcommand = active->get_name();

  try {
    if (!config_path.empty()) {
      // Flags win over config-file values: re-apply the command line on top
      // of a config-derived baseline.
      RunConfig from_file;
      apply_config_file(config_path, from_file);
      RunConfig flags_only = config;
      RunConfig merged = from_file;
      auto chosen = [active](const char* flag) {
        return active->count(flag) > 0;
      };
      if (chosen("--manifest")) merged.manifest_dir = flags_only.manifest_dir;
      if (chosen("--dict")) merged.dict_path = flags_only.dict_path;
      if (chosen("--overlay")) merged.overlay_path = flags_only.overlay_path;
      if (chosen("--hyp")) merged.hyp_paths = flags_only.hyp_paths;
      if (chosen("--markers")) merged.markers_path = flags_only.markers_path;
      if (chosen("--out")) merged.out_dir = flags_only.out_dir;
      if (chosen("--word-tier")) merged.word_tier = flags_only.word_tier;
      if (chosen("--phone-tier")) merged.phone_tier = flags_only.phone_tier;
      if (chosen("--stress")) merged.stress_mode = flags_only.stress_mode;
      if (chosen("--costs")) merged.cost_preset = flags_only.cost_preset;
      if (chosen("--cost-sub")) merged.cost_sub = flags_only.cost_sub;
      if (chosen("--cost-del")) merged.cost_del = flags_only.cost_del;
      if (chosen("--cost-ins")) merged.cost_ins = flags_only.cost_ins;
      if (chosen("--alpha")) merged.alpha = flags_only.alpha;
      if (chosen("--threads")) merged.threads = flags_only.threads;
      if (chosen("--lmm-metric")) merged.lmm_metric = flags_only.lmm_metric;
      if (chosen("--ref-group")) merged.ref_group = flags_only.ref_group;
      if (chosen("--ref-system")) merged.ref_system = flags_only.ref_system;
      if (chosen("--context-overlap"))
        merged.context_overlap = flags_only.context_overlap;
      config = merged;
    }

    std::vector<Diagnostic> diagnostics = validate(config, subcommand);
    bool any_fatal = false;
    for (const Diagnostic& d : diagnostics) {
      std::cerr << (d.fatal ? "error: " : "warning: ") << d.message << "\n";
      any_fatal = any_fatal || d.fatal;
    }
    if (any_fatal) {
      std::cerr << "run `phoneval " << subcommand << " --help` for usage\n";
      return 1;
    }

    Context ctx;
    ctx.config = config;
    ctx.subcommand = subcommand;
    fs::create_directories(config.out_dir);

    if (subcommand == "score") {
      stage_score(ctx);
    } else if (subcommand == "per") {
      stage_per(ctx);
    } else if (subcommand == "markers") {
      stage_markers(ctx);
    } else if (subcommand == "stats") {
      stage_stats(ctx);
    } else if (subcommand == "report") {
      stage_report(ctx);
    } else {  // all
      stage_score(ctx);
      if (!config.dict_path.empty()) {
        stage_per(ctx);
        stage_markers(ctx);
      }
      stage_stats(ctx);
      stage_report(ctx);
    }
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> with_program = args;
  with_program.insert(with_program.begin(), "phoneval");
  std::vector<const char*> argv;
  argv.reserve(with_program.size());
  for (const std::string& a : with_program) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace phoneval::cli
