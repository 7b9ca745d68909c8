#include "phoneval/markers.hpp"

#include <algorithm>
#include <set>

#include <doctest.h>

#include "../support/minicorpus.hpp"
#include "phoneval/errors.hpp"

using namespace phoneval;

namespace {

Lexicon marker_lexicon() {
  return parse_dictionary(
      "CAUGHT  K AO1 T\nPIN  P IH1 N\nPEN  P EH1 N\nTIME  T AY1 M\n"
      "CAR  K AA1 R\nTHIS  DH IH1 S\nWITH  W IH1 TH\nTEST  T EH1 S T\n"
      "HAD  HH AE1 D\nSIDE  S AY1 D\nFOOL  F UW1 L\nFULL  F UH1 L\n"
      "FEEL  F IY1 L\nFILL  F IH1 L\nWRITE  R AY1 T\nTODAY  T AH0 D EY1\n"
      "COT  K AA1 T\n");
}

std::set<Marker> fired(const std::string& word) {
  Lexicon lex = marker_lexicon();
  ReferenceUtterance ref;
  ref.id = "u";
  ref.speaker_id = "s";
  ref.words.push_back({word, 0.0, 1.0});
  ref.word_phone_map = {{0, 0}};
  std::set<Marker> out;
  for (const MarkerContext& ctx : detect_contexts(ref, lex).contexts)
    out.insert(ctx.marker);
  return out;
}

}  // namespace

TEST_CASE("the example words fire exactly their targeted markers") {
  using enum Marker;
  CHECK(fired("caught") == std::set<Marker>{LowBackMerger});
  CHECK(fired("pin") == std::set<Marker>{PreNasalMerger});
  CHECK(fired("pen") == std::set<Marker>{PreNasalMerger});
  CHECK(fired("time") == std::set<Marker>{AyMonophthong});
  CHECK(fired("car") == std::set<Marker>{PostVocalicR});
  CHECK(fired("this") == std::set<Marker>{ThStopping, ThFronting});
  CHECK(fired("with") == std::set<Marker>{ThStopping, ThFronting});
  CHECK(fired("test") == std::set<Marker>{ClusterReduction, FinalDebuccalized});
  CHECK(fired("had") == std::set<Marker>{FinalDevoicing});
  CHECK(fired("side") == std::set<Marker>{FinalDebuccalized});
  CHECK(fired("fool") == std::set<Marker>{PreLateralBack});
  CHECK(fired("full") == std::set<Marker>{PreLateralBack});
  CHECK(fired("feel") == std::set<Marker>{PreLateralFront});
  CHECK(fired("fill") == std::set<Marker>{PreLateralFront});
}

TEST_CASE("triggers carry the firing subsequence") {
  Lexicon lex = marker_lexicon();
  ReferenceUtterance ref;
  ref.id = "u";
  ref.speaker_id = "s";
  ref.words.push_back({"test", 0.0, 1.0});
  ref.word_phone_map = {{0, 0}};
  auto scan = detect_contexts(ref, lex);
  REQUIRE(scan.contexts.size() == 2);
  for (const MarkerContext& ctx : scan.contexts) {
    if (ctx.marker == Marker::ClusterReduction) CHECK(ctx.trigger == "S T");
    if (ctx.marker == Marker::FinalDebuccalized) CHECK(ctx.trigger == "S T");
  }
}

TEST_CASE("contexts fall back to the annotated phone range") {
  Lexicon lex = marker_lexicon();  // no entry for "dawn"
  ReferenceUtterance ref;
  ref.id = "u";
  ref.speaker_id = "s";
  ref.words.push_back({"dawn", 0.0, 1.0});
  ref.phones = {{"D", 0.0, 0.3}, {"AO1", 0.3, 0.6}, {"N", 0.6, 1.0}};
  ref.word_phone_map = {{0, 3}};
  auto scan = detect_contexts(ref, lex);
  std::set<Marker> markers;
  for (const auto& ctx : scan.contexts) markers.insert(ctx.marker);
  CHECK(markers == std::set<Marker>{Marker::LowBackMerger});
  CHECK(scan.skipped.empty());
}

TEST_CASE("words with no pronunciation and no phones are skipped") {
  Lexicon lex = marker_lexicon();
  ReferenceUtterance ref;
  ref.id = "u";
  ref.speaker_id = "s";
  ref.words.push_back({"qwzx", 0.0, 1.0});
  ref.word_phone_map = {{0, 0}};
  auto scan = detect_contexts(ref, lex);
  CHECK(scan.contexts.empty());
  REQUIRE(scan.skipped.size() == 1);
  CHECK(scan.skipped[0].word == "qwzx");
}

TEST_CASE("detection is a pure per-utterance function") {
  Lexicon lex = marker_lexicon();
  auto make = [](const std::string& id, const std::string& word) {
    ReferenceUtterance ref;
    ref.id = id;
    ref.speaker_id = "s";
    ref.words.push_back({word, 0.0, 1.0});
    ref.word_phone_map = {{0, 0}};
    return ref;
  };
  auto a = detect_contexts(make("u1", "caught"), lex).contexts;
  auto b = detect_contexts(make("u2", "test"), lex).contexts;
  // Same inputs in any order give the same per-utterance output.
  auto a2 = detect_contexts(make("u1", "caught"), lex).contexts;
  CHECK(a == a2);
  CHECK(a.size() == 1);
  CHECK(b.size() == 2);
}

TEST_CASE("realization means follow the Table 5 convention") {
  Manifest manifest;
  for (const char* id : {"a1", "a2", "a3", "a4"}) {
    Speaker s;
    s.id = id;
    s.ethnicity = EthnicityCode::AA;
    s.ethnicity_label = "AA";
    s.age = 30;
    manifest.speakers.push_back(s);
  }
  // One utterance per speaker; a4 has no annotation records at all, so the
  // denominator is 3 annotated speakers.
  for (const char* id : {"a1", "a2", "a3", "a4"})
    manifest.utterances.push_back(
        {std::string("u_") + id, id, "g.TextGrid", "x"});

  std::vector<MarkerRealization> records;
  auto add = [&records](const std::string& utt, int count, bool realized) {
    for (int k = 0; k < count; ++k)
      records.push_back({utt, static_cast<std::size_t>(k),
                         Marker::LowBackMerger, realized});
  };
  add("u_a1", 4, true);
  add("u_a2", 5, true);
  add("u_a3", 4, true);

  RealizationMeans means = realization_means(records, manifest);
  CHECK(means.annotated_speakers.at("AA") == 3);
  CHECK(means.means.at({"AA", Marker::LowBackMerger}) ==
        doctest::Approx(13.0 / 3.0));  // 4.33
}

TEST_CASE("all-unrealized annotations mean zero, absent groups are noted") {
  Manifest manifest;
  Speaker ya;
  ya.id = "y1";
  ya.ethnicity = EthnicityCode::YA;
  ya.ethnicity_label = "YA";
  ya.age = 40;
  Speaker aa;
  aa.id = "a1";
  aa.ethnicity = EthnicityCode::AA;
  aa.ethnicity_label = "AA";
  aa.age = 40;
  manifest.speakers = {ya, aa};
  manifest.utterances.push_back({"u1", "y1", "g.TextGrid", "x"});
  manifest.utterances.push_back({"u2", "a1", "g.TextGrid", "x"});

  std::vector<MarkerRealization> records = {
      {"u1", 0, Marker::LowBackMerger, false},
      {"u1", 1, Marker::LowBackMerger, false},
  };
  RealizationMeans means = realization_means(records, manifest);
  CHECK(means.means.at({"YA", Marker::LowBackMerger}) == 0.0);
  CHECK(means.annotated_speakers.count("AA") == 0);
  REQUIRE(means.notes.size() == 1);
  CHECK(means.notes[0].find("AA") != std::string::npos);
}

namespace {

struct CoocFixture {
  Corpus corpus;
  Lexicon lex = marker_lexicon();
  std::vector<Hypothesis> hyps;
  std::vector<MarkerRealization> realizations;

  CoocFixture() {
    corpus = testing::MiniCorpus()
                 .speaker("s1", "AA")
                 .speaker("s2", "CA")
                 .utterance("u1", "s1",
                            {{"write", {"R", "AY1", "T"}},
                             {"caught", {"K", "AO1", "T"}},
                             {"today", {"T", "AH0", "D", "EY1"}}})
                 .utterance("u2", "s2",
                            {{"write", {"R", "AY1", "T"}},
                             {"caught", {"K", "AA1", "T"}},
                             {"today", {"T", "AH0", "D", "EY1"}}})
                 .build();
    hyps = {{"u1", "sys", "write cot today"},
            {"u2", "sys", "write caught today"}};
    realizations = {{"u1", 1, Marker::LowBackMerger, true},
                    {"u2", 1, Marker::LowBackMerger, false}};
  }

  CooccurrenceTable run(OverlapMode mode = OverlapMode::RealizedOnly) {
    auto alignments = word_alignments(corpus, hyps);
    ContextScan scan;
    for (const ReferenceUtterance& ref : corpus.references) {
      auto s = detect_contexts(ref, lex);
      scan.contexts.insert(scan.contexts.end(), s.contexts.begin(),
                           s.contexts.end());
      scan.skipped.insert(scan.skipped.end(), s.skipped.begin(),
                          s.skipped.end());
    }
    return cooccurrence(alignments, scan.contexts, scan.skipped, realizations,
                        corpus, mode);
  }
};

}  // namespace

TEST_CASE("errored realized tokens overlap; correct ones only count realized") {
  CoocFixture fixture;
  CooccurrenceTable table = fixture.run();

  const CoocCell& aa = table.cells.at({"AA", "sys", Marker::LowBackMerger});
  CHECK(aa.contexts == 1);
  CHECK(aa.realized == 1);
  CHECK(aa.overlap == 1);  // caught -> cot substitution on a realized token
  CHECK(aa.total_errors == 1);

  const CoocCell& ca = table.cells.at({"CA", "sys", Marker::LowBackMerger});
  CHECK(ca.contexts == 1);
  CHECK(ca.realized == 0);
  CHECK(ca.overlap == 0);
  CHECK(ca.total_errors == 0);
}

TEST_CASE("a realized token transcribed correctly adds no overlap") {
  CoocFixture fixture;
  fixture.hyps[0].text = "write caught today";  // now correct
  CooccurrenceTable table = fixture.run();
  const CoocCell& aa = table.cells.at({"AA", "sys", Marker::LowBackMerger});
  CHECK(aa.realized == 1);
  CHECK(aa.overlap == 0);
}

TEST_CASE("insertions never overlap") {
  CoocFixture fixture;
  fixture.hyps[0].text = "write a caught today";  // insertion only
  CooccurrenceTable table = fixture.run();
  const CoocCell& aa = table.cells.at({"AA", "sys", Marker::LowBackMerger});
  CHECK(aa.overlap == 0);
  CHECK(aa.total_errors == 1);  // the insertion still counts as an error
}

TEST_CASE("deletions of realized tokens overlap") {
  CoocFixture fixture;
  fixture.hyps[0].text = "write today";
  CooccurrenceTable table = fixture.run();
  CHECK(table.cells.at({"AA", "sys", Marker::LowBackMerger}).overlap == 1);
}

TEST_CASE("context-based sensitivity mode counts unannotated errors") {
  CoocFixture fixture;
  fixture.realizations.clear();
  CooccurrenceTable realized_only = fixture.run(OverlapMode::RealizedOnly);
  CHECK(realized_only.cells.at({"AA", "sys", Marker::LowBackMerger}).overlap ==
        0);
  CooccurrenceTable any = fixture.run(OverlapMode::AnyContext);
  CHECK(any.cells.at({"AA", "sys", Marker::LowBackMerger}).overlap == 1);
}

TEST_CASE("removing realizations zeroes overlap but not contexts") {
  CoocFixture fixture;
  CooccurrenceTable before = fixture.run();
  fixture.realizations.clear();
  CooccurrenceTable after = fixture.run();
  for (const auto& [key, cell] : after.cells) {
    CHECK(cell.overlap == 0);
    CHECK(cell.contexts == before.cells.at(key).contexts);
  }
}

TEST_CASE("overlap <= realized <= contexts everywhere") {
  CoocFixture fixture;
  CooccurrenceTable table = fixture.run();
  for (const auto& [key, cell] : table.cells) {
    CHECK(cell.overlap <= cell.realized);
    CHECK(cell.realized <= cell.contexts);
  }
}

TEST_CASE("out-of-range realization token index is a hard error") {
  CoocFixture fixture;
  fixture.realizations.push_back({"u1", 9, Marker::LowBackMerger, true});
  CHECK_THROWS_AS(fixture.run(), DataError);
}

TEST_CASE("normalized rates are overlap over contexts, NA when no contexts") {
  CoocFixture fixture;
  CooccurrenceTable table = fixture.run();
  auto rates = normalized_rates(table);
  CHECK(*rates.at({"AA", "sys", Marker::LowBackMerger}) == 1.0);
  CHECK(*rates.at({"CA", "sys", Marker::LowBackMerger}) == 0.0);
  // No pre-lateral contexts exist in this corpus: not applicable, never 0.
  CHECK_FALSE(rates.at({"AA", "sys", Marker::PreLateralFront}).has_value());
}

TEST_CASE("synthetic counted cell: 10 contexts, 6 realized, 2 errored") {
  Lexicon lex = parse_dictionary("CAUGHT  K AO1 T\nCOT  K AA1 T\n");
  testing::MiniCorpus builder;
  builder.speaker("s1", "AA");
  std::vector<Hypothesis> hyps;
  std::vector<MarkerRealization> realizations;
  for (int i = 0; i < 10; ++i) {
    std::string id = "u" + std::to_string(i);
    builder.utterance(id, "s1", {{"caught", {"K", "AO1", "T"}}});
    // 6 realized (i < 6); errors planted on two realized tokens and one
    // unrealized token.
    realizations.push_back({id, 0, Marker::LowBackMerger, i < 6});
    bool err = i == 0 || i == 1 || i == 7;
    hyps.push_back({id, "sys", err ? "cot" : "caught"});
  }
  Corpus corpus = builder.build();
  auto alignments = word_alignments(corpus, hyps);
  std::vector<MarkerContext> contexts;
  for (const ReferenceUtterance& ref : corpus.references) {
    auto scan = detect_contexts(ref, lex);
    contexts.insert(contexts.end(), scan.contexts.begin(),
                    scan.contexts.end());
  }
  CooccurrenceTable table =
      cooccurrence(alignments, contexts, {}, realizations, corpus);
  const CoocCell& cell = table.cells.at({"AA", "sys", Marker::LowBackMerger});
  CHECK(cell.contexts == 10);
  CHECK(cell.realized == 6);
  CHECK(cell.overlap == 2);
  CHECK(cell.total_errors == 3);
  CHECK(*normalized_rates(table).at({"AA", "sys", Marker::LowBackMerger}) ==
        doctest::Approx(0.2));
}

TEST_CASE("every marker code in any output is one of the eleven") {
  CoocFixture fixture;
  CooccurrenceTable table = fixture.run();
  for (const auto& [key, _] : table.cells)
    CHECK(parse_marker(marker_code(key.marker)).has_value());
  CHECK(kAllMarkers.size() == 11);
}

TEST_CASE("co-occurrence JSON round-trips") {
  CoocFixture fixture;
  CooccurrenceTable table = fixture.run();
  RealizationMeans means =
      realization_means(fixture.realizations, fixture.corpus.manifest);
  std::string json = to_json_string(table, means);
  CooccurrenceTable table2;
  RealizationMeans means2;
  cooccurrence_from_json(json, table2, means2);
  CHECK(table2 == table);
  CHECK(means2 == means);
}
