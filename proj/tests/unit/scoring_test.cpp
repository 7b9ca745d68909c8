#include "phoneval/scoring.hpp"

#include <array>

#include <doctest.h>

#include "../support/minicorpus.hpp"
#include "phoneval/errors.hpp"

using namespace phoneval;

namespace {

Lexicon demo_lexicon() {
  return parse_dictionary(
      "WRITE  R AY1 T\nCAUGHT  K AO1 T\nCOT  K AA1 T\nTODAY  T AH0 D EY1\n"
      "PEN  P EH1 N\nPIN  P IH1 N\n");
}

Corpus two_speaker_corpus() {
  return testing::MiniCorpus()
      .speaker("s1", "AA")
      .speaker("s2", "AA", "M")
      .utterance("u1", "s1",
                 {{"write", {"R", "AY1", "T"}},
                  {"caught", {"K", "AO1", "T"}},
                  {"today", {"T", "AH0", "D", "EY1"}}})
      .utterance("u2", "s1",
                 {{"write", {"R", "AY1", "T"}},
                  {"pen", {"P", "EH1", "N"}},
                  {"today", {"T", "AH0", "D", "EY1"}}})
      .utterance("u3", "s2",
                 {{"write", {"R", "AY1", "T"}},
                  {"caught", {"K", "AO1", "T"}},
                  {"today", {"T", "AH0", "D", "EY1"}}})
      .build();
}

std::vector<Hypothesis> make_hyps(
    std::initializer_list<std::array<const char*, 3>> rows) {
  std::vector<Hypothesis> out;
  for (const auto& row : rows) out.push_back({row[0], row[1], row[2]});
  return out;
}

}  // namespace

TEST_CASE("speaker cells pool counts before the rate is taken") {
  Corpus corpus = two_speaker_corpus();
  auto hyps = make_hyps({{"u1", "sys", "write cot today"},
                         {"u2", "sys", "write pen today"}});
  ScoreOptions options;
  options.threads = 1;
  CorpusScores scores = score_corpus(corpus, hyps, nullptr, options);

  const Tally& cell = scores.table.cells.at({"s1", "sys", MetricKind::WER});
  // (S+D+I, N) = (1,3) then (0,3): pooled rate 1/6, not mean of rates.
  CHECK(cell.S == 1);
  CHECK(cell.N == 6);
  CHECK(cell.rate == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("group rollups average speaker rates with sd/sqrt(n)") {
  Corpus corpus = testing::MiniCorpus()
                      .speaker("s1", "AA")
                      .speaker("s2", "AA")
                      .utterance("u1", "s1",
                                 {{"a", {"AA1"}}, {"b", {"B", "IY1"}},
                                  {"c", {"S", "IY1"}}, {"d", {"D", "IY1"}},
                                  {"e", {"IY1"}}, {"f", {"EH1", "F"}},
                                  {"g", {"JH", "IY1"}}, {"h", {"EY1"}},
                                  {"i", {"AY1"}}, {"j", {"JH", "EY1"}}})
                      .utterance("u2", "s2",
                                 {{"a", {"AA1"}}, {"b", {"B", "IY1"}},
                                  {"c", {"S", "IY1"}}, {"d", {"D", "IY1"}},
                                  {"e", {"IY1"}}, {"f", {"EH1", "F"}},
                                  {"g", {"JH", "IY1"}}, {"h", {"EY1"}},
                                  {"i", {"AY1"}}, {"j", {"JH", "EY1"}}})
                      .build();
  // s1: 1 error in 10 words = 0.10; s2: 2 errors in 10 = 0.20.
  auto hyps = make_hyps({{"u1", "sys", "a b c d e f g h i x"},
                         {"u2", "sys", "a b c d e f g h x y"}});
  ScoreOptions options;
  CorpusScores scores = score_corpus(corpus, hyps, nullptr, options);
  const GroupStat& g = scores.table.groups.at({"AA", "sys", MetricKind::WER});
  CHECK(g.mean == doctest::Approx(0.15));
  REQUIRE(g.se.has_value());
  CHECK(*g.se == doctest::Approx(0.05));  // sd(0.1,0.2)/sqrt(2)
  CHECK(g.n == 2);
}

TEST_CASE("hypothesis for an unknown utterance is a hard error") {
  Corpus corpus = two_speaker_corpus();
  auto hyps = make_hyps({{"nope", "sys", "write"}});
  ScoreOptions options;
  CHECK_THROWS_AS(score_corpus(corpus, hyps, nullptr, options), DataError);
}

TEST_CASE("empty hypothesis set lists every utterance as uncovered") {
  Corpus corpus = two_speaker_corpus();
  CorpusScores scores = score_corpus(corpus, {}, nullptr, ScoreOptions{});
  CHECK(scores.table.cells.empty());
  CHECK(scores.coverage.size() == corpus.manifest.utterances.size());
}

TEST_CASE("utterances missing for one system land in coverage") {
  Corpus corpus = two_speaker_corpus();
  auto hyps = make_hyps({{"u1", "sysA", "write caught today"},
                         {"u2", "sysA", "write pen today"},
                         {"u3", "sysA", "write caught today"},
                         {"u1", "sysB", "write caught today"}});
  CorpusScores scores = score_corpus(corpus, hyps, nullptr, ScoreOptions{});
  REQUIRE(scores.coverage.size() == 2);
  CHECK(scores.coverage[0] == CoverageGap{"u2", "sysB"});
  CHECK(scores.coverage[1] == CoverageGap{"u3", "sysB"});
  // The uncovered utterances do not contribute to sysB's cells.
  CHECK(scores.table.cells.count({"s1", "sysB", MetricKind::WER}) == 1);
  CHECK(scores.table.cells.count({"s2", "sysB", MetricKind::WER}) == 0);
}

TEST_CASE("PER cells carry OOV diagnostics") {
  Corpus corpus = two_speaker_corpus();
  Lexicon lex = demo_lexicon();
  auto hyps = make_hyps({{"u1", "sys", "write qwzx today"}});
  ScoreOptions options;
  options.per = true;
  CorpusScores scores = score_corpus(corpus, hyps, &lex, options);
  REQUIRE(scores.oov_by_system.count("sys"));
  REQUIRE(scores.oov_by_system["sys"].size() == 1);
  CHECK(scores.oov_by_system["sys"][0].token == "qwzx");
  const Tally& per = scores.table.cells.at({"s1", "sys", MetricKind::PER});
  CHECK(per.N == 10);  // reference phones of u1
}

TEST_CASE("scoring is deterministic across thread counts") {
  Corpus corpus = two_speaker_corpus();
  Lexicon lex = demo_lexicon();
  auto hyps = make_hyps({{"u1", "sysA", "write cot today"},
                         {"u2", "sysA", "write pin today"},
                         {"u3", "sysA", "write caught today"},
                         {"u1", "sysB", "write caught today"},
                         {"u2", "sysB", "write pen today"},
                         {"u3", "sysB", "write cot today"}});
  ScoreOptions one;
  one.per = true;
  one.threads = 1;
  ScoreOptions many = one;
  many.threads = 8;
  std::string a = to_json_string(score_corpus(corpus, hyps, &lex, one).table);
  std::string b = to_json_string(score_corpus(corpus, hyps, &lex, many).table);
  CHECK(a == b);

  // Input order must not matter either: reversed hypothesis list.
  std::vector<Hypothesis> reversed(hyps.rbegin(), hyps.rend());
  std::string c =
      to_json_string(score_corpus(corpus, reversed, &lex, one).table);
  CHECK(a == c);
}

TEST_CASE("per_reduction averages speaker reductions per system") {
  ScoreTable table;
  table.manifest_digest = "x";
  auto put = [&table](const char* speaker, const char* system, MetricKind m,
                      std::int64_t errors, std::int64_t n) {
    Tally t;
    t.S = errors;
    t.N = n;
    t.C = n - errors;
    t.finish();
    table.cells[{speaker, system, m}] = t;
  };
  // s1: WER 0.20, PER 0.10 -> 50%; s2: WER 0.20, PER 0.20 -> 0%.
  put("s1", "sys", MetricKind::WER, 2, 10);
  put("s1", "sys", MetricKind::PER, 1, 10);
  put("s2", "sys", MetricKind::WER, 2, 10);
  put("s2", "sys", MetricKind::PER, 2, 10);
  auto reduction = per_reduction(table);
  REQUIRE(reduction.at("sys").has_value());
  CHECK(*reduction.at("sys") == doctest::Approx(0.25));

  // Reductions of 40% and 44% average to 42%.
  ScoreTable t2;
  t2.cells[{"s1", "sys", MetricKind::WER}] = [] {
    Tally t;
    t.S = 25;
    t.N = 100;
    t.C = 75;
    t.finish();
    return t;
  }();
  t2.cells[{"s1", "sys", MetricKind::PER}] = [] {
    Tally t;
    t.S = 15;
    t.N = 100;
    t.C = 85;
    t.finish();
    return t;
  }();
  t2.cells[{"s2", "sys", MetricKind::WER}] = [] {
    Tally t;
    t.S = 25;
    t.N = 100;
    t.C = 75;
    t.finish();
    return t;
  }();
  t2.cells[{"s2", "sys", MetricKind::PER}] = [] {
    Tally t;
    t.S = 14;
    t.N = 100;
    t.C = 86;
    t.finish();
    return t;
  }();
  auto r2 = per_reduction(t2);
  CHECK(*r2.at("sys") == doctest::Approx(0.42));
}

TEST_CASE("speakers with WER zero are excluded from reduction") {
  ScoreTable table;
  Tally zero;
  zero.N = 10;
  zero.C = 10;
  zero.finish();
  table.cells[{"s1", "sys", MetricKind::WER}] = zero;
  table.cells[{"s1", "sys", MetricKind::PER}] = zero;
  auto reduction = per_reduction(table);
  CHECK_FALSE(reduction.at("sys").has_value());
}

TEST_CASE("score table JSON round-trips, including the infinity sentinel") {
  ScoreTable table;
  table.manifest_digest = "abc123";
  Tally inf_tally;
  inf_tally.I = 3;
  inf_tally.finish();
  table.cells[{"s1", "sys", MetricKind::WER}] = inf_tally;
  Tally normal;
  normal.S = 1;
  normal.N = 4;
  normal.C = 3;
  normal.finish();
  table.cells[{"s2", "sys", MetricKind::PER}] = normal;
  table.groups[{"AA", "sys", MetricKind::WER}] = {0.25, 0.01, 2};
  table.groups[{"CA", "sys", MetricKind::WER}] = {0.5, std::nullopt, 1};

  ScoreTable parsed = score_table_from_json(to_json_string(table));
  CHECK(parsed == table);
}

TEST_CASE("merging tables from different manifests fails") {
  ScoreTable a, b;
  a.manifest_digest = "one";
  b.manifest_digest = "two";
  CHECK_THROWS_AS(merge_score_tables(a, b), DataError);
}

TEST_CASE("word alignments stay in the annotation token space") {
  Corpus corpus = two_speaker_corpus();
  auto hyps = make_hyps({{"u1", "sys", "write today"}});
  auto alignments = word_alignments(corpus, hyps);
  REQUIRE(alignments.size() == 1);
  const AlignmentResult& r = alignments[0].alignment;
  CHECK(r.D == 1);
  REQUIRE(r.ops.size() == 3);
  CHECK(r.ops[1].kind == EditKind::Deletion);
  CHECK(*r.ops[1].ref_index == 1);  // "caught" is token 1 of the utterance
}
