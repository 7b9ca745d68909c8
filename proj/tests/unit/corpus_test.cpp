#include "phoneval/corpus.hpp"

#include <doctest.h>

#include "phoneval/errors.hpp"

using namespace phoneval;

namespace {

TextGrid caught_grid() {
  TextGrid grid;
  grid.xmin = 0.0;
  grid.xmax = 2.0;
  Tier words{"word",
             {{0.0, 0.5, ""}, {0.5, 1.5, "caught"}, {1.5, 2.0, ""}},
             0.0,
             2.0};
  Tier phones{"phone",
              {{0.0, 0.5, ""},
               {0.5, 0.8, "K"},
               {0.8, 1.2, "AO"},
               {1.2, 1.5, "T"},
               {1.5, 2.0, ""}},
              0.0,
              2.0};
  grid.tiers = {words, phones};
  return grid;
}

constexpr const char* kSpeakersCsv =
    "speaker_id,ethnicity,gender,age\n"
    "aa01,AA,F,23\naa02,AA,F,35\naa03,AA,M,48\naa04,AA,M,64\n"
    "ca01,CA,F,21\nca02,CA,F,30\nca03,CA,M,45\nca04,CA,M,61\n"
    "cx01,CX,F,22\ncx02,CX,F,29\ncx03,CX,M,40\ncx04,CX,M,53\n"
    "ya01,YA,F,24\nya02,YA,F,33\nya03,YA,M,47\nya04,YA,M,59\n";

}  // namespace

TEST_CASE("extract_reference drops silence and maps phones to words") {
  ReferenceUtterance ref =
      extract_reference(caught_grid(), "word", "phone", "u1", "aa01");
  REQUIRE(ref.words.size() == 1);
  CHECK(ref.words[0].label == "caught");
  REQUIRE(ref.phones.size() == 3);
  CHECK(ref.phones[0].label == "K");
  CHECK(ref.phones[1].label == "AO");
  CHECK(ref.phones[2].label == "T");
  REQUIRE(ref.word_phone_map.size() == 1);
  CHECK(ref.word_phone_map[0] == std::pair<std::size_t, std::size_t>{0, 3});
}

TEST_CASE("extract_reference uppercases phone labels and keeps stress") {
  TextGrid grid = caught_grid();
  grid.tiers[1].intervals[2].label = "ao1";
  ReferenceUtterance ref =
      extract_reference(grid, "word", "phone", "u1", "aa01");
  CHECK(ref.phones[1].label == "AO1");
}

TEST_CASE("silence-only grid yields an empty utterance") {
  TextGrid grid;
  grid.xmin = 0.0;
  grid.xmax = 1.0;
  grid.tiers = {Tier{"word", {{0.0, 1.0, ""}}, 0.0, 1.0},
                Tier{"phone", {{0.0, 1.0, ""}}, 0.0, 1.0}};
  ReferenceUtterance ref =
      extract_reference(grid, "word", "phone", "u1", "s1");
  CHECK(ref.words.empty());
  CHECK(ref.phones.empty());
}

TEST_CASE("phone straddling a word boundary by more than 1 ms errors") {
  TextGrid grid = caught_grid();
  grid.tiers[1].intervals[3] = {1.2, 1.505, "T"};  // leaks 5 ms past the word
  CHECK_THROWS_AS(extract_reference(grid, "word", "phone", "u1", "s"),
                  DataError);
}

TEST_CASE("phone within 1 ms of the boundary is tolerated") {
  TextGrid grid = caught_grid();
  grid.tiers[1].intervals[3] = {1.2, 1.5004, "T"};
  ReferenceUtterance ref =
      extract_reference(grid, "word", "phone", "u1", "s");
  CHECK(ref.phones.size() == 3);
}

TEST_CASE("missing tier name errors") {
  CHECK_THROWS_AS(extract_reference(caught_grid(), "palabras", "phone", "u", "s"),
                  DataError);
}

TEST_CASE("word_phone_map concatenation reproduces the phone sequence") {
  TextGrid grid;
  grid.xmin = 0.0;
  grid.xmax = 3.0;
  Tier words{"word",
             {{0.0, 1.0, "write"}, {1.0, 2.0, "cot"}, {2.0, 3.0, "today"}},
             0.0,
             3.0};
  Tier phones{"phone",
              {{0.0, 0.3, "R"},
               {0.3, 0.7, "AY"},
               {0.7, 1.0, "T"},
               {1.0, 1.4, "K"},
               {1.4, 1.7, "AA"},
               {1.7, 2.0, "T"},
               {2.0, 2.2, "T"},
               {2.2, 2.5, "AH"},
               {2.5, 2.8, "D"},
               {2.8, 3.0, "EY"}},
              0.0,
              3.0};
  grid.tiers = {words, phones};
  ReferenceUtterance ref =
      extract_reference(grid, "word", "phone", "u1", "s1");
  REQUIRE(ref.word_phone_map.size() == 3);
  std::vector<std::string> rebuilt;
  for (auto [begin, end] : ref.word_phone_map)
    for (std::size_t k = begin; k < end; ++k)
      rebuilt.push_back(ref.phones[k].label);
  std::vector<std::string> all;
  for (const TimedToken& p : ref.phones) all.push_back(p.label);
  CHECK(rebuilt == all);
}

TEST_CASE("manifest mirroring the evaluation subset loads") {
  std::string utterances =
      "utterance_id,speaker_id,textgrid_path,reference_text\n"
      "u1,aa01,grids/u1.TextGrid,write caught today\n";
  ManifestLoad loaded = load_manifest(kSpeakersCsv, utterances);
  CHECK(loaded.manifest.speakers.size() == 16);
  CHECK(loaded.warnings.empty());
  int females = 0;
  for (const Speaker& s : loaded.manifest.speakers)
    if (s.gender == GenderCode::F) ++females;
  CHECK(females == 8);
  CHECK(loaded.manifest.speaker("ya03")->ethnicity == EthnicityCode::YA);
  CHECK(!loaded.manifest.digest.empty());
}

TEST_CASE("empty utterance list is a valid manifest") {
  ManifestLoad loaded = load_manifest(
      kSpeakersCsv, "utterance_id,speaker_id,textgrid_path,reference_text\n");
  CHECK(loaded.manifest.utterances.empty());
}

TEST_CASE("dangling speaker reference is a hard error") {
  std::string utterances =
      "utterance_id,speaker_id,textgrid_path,reference_text\n"
      "u1,ZZ9,grids/u1.TextGrid,write caught today\n";
  CHECK_THROWS_AS(load_manifest(kSpeakersCsv, utterances), DataError);
}

TEST_CASE("unknown ethnicity warns and maps to other") {
  std::string speakers =
      "speaker_id,ethnicity,gender,age\n"
      "s1,ZZ,F,30\n";
  std::vector<std::string> warnings;
  auto loaded = load_speakers(speakers, "speakers.csv", &warnings);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].ethnicity == EthnicityCode::Other);
  CHECK(loaded[0].ethnicity_label == "ZZ");
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("ZZ") != std::string::npos);
}

TEST_CASE("duplicate speaker ids are rejected") {
  std::string speakers =
      "speaker_id,ethnicity,gender,age\ns1,AA,F,30\ns1,CA,M,40\n";
  CHECK_THROWS_AS(load_speakers(speakers, "speakers.csv", nullptr), DataError);
}

TEST_CASE("hypotheses load in order and carry line numbers") {
  std::string jsonl =
      R"({"utterance_id":"u1","system_id":"apple","text":"write cot today"})"
      "\n"
      R"({"utterance_id":"u2","system_id":"apple","text":"write pen today"})"
      "\n";
  auto hyps = load_hypotheses(jsonl, "hyps.jsonl");
  REQUIRE(hyps.size() == 2);
  CHECK(hyps[0].utterance_id == "u1");
  CHECK(hyps[0].text == "write cot today");
  CHECK(hyps[0].source_line == 1);
  CHECK(hyps[1].source_line == 2);
}

TEST_CASE("duplicate (utterance, system) pairs are rejected") {
  std::string jsonl =
      R"({"utterance_id":"u1","system_id":"apple","text":"a"})" "\n"
      R"({"utterance_id":"u1","system_id":"apple","text":"b"})" "\n";
  CHECK_THROWS_AS(load_hypotheses(jsonl, "hyps.jsonl"), DataError);
}

TEST_CASE("malformed hypothesis line reports its line number") {
  std::string jsonl =
      R"({"utterance_id":"u1","system_id":"apple","text":"a"})" "\n"
      "{oops\n";
  try {
    load_hypotheses(jsonl, "hyps.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("a generated hypothesis set has systems x utterances entries") {
  std::string jsonl;
  const int systems = 4, utterances = 48;  // 16 speakers x 3
  for (int s = 0; s < systems; ++s)
    for (int u = 0; u < utterances; ++u)
      jsonl += "{\"utterance_id\":\"u" + std::to_string(u) +
               "\",\"system_id\":\"sys" + std::to_string(s) +
               "\",\"text\":\"write caught today\"}\n";
  CHECK(load_hypotheses(jsonl).size() == systems * utterances);
}

TEST_CASE("marker annotations parse codes and presence flags") {
  std::string tsv =
      "utterance_id\ttoken_index\tmarker\trealized\n"
      "u1\t0\t-AO\t1\n"
      "u1\t1\tprel-i\t0\n";
  auto records = load_marker_annotations(tsv, "ann.tsv");
  REQUIRE(records.size() == 2);
  CHECK(records[0].marker == Marker::LowBackMerger);
  CHECK(records[0].realized);
  CHECK(records[1].marker == Marker::PreLateralFront);
  CHECK_FALSE(records[1].realized);
}

TEST_CASE("unknown marker code is rejected with its line") {
  std::string tsv =
      "utterance_id\ttoken_index\tmarker\trealized\n"
      "u1\t0\tXX\t1\n";
  try {
    load_marker_annotations(tsv, "ann.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("XX") != std::string::npos);
  }
}

TEST_CASE("annotation file with only a header is empty") {
  CHECK(load_marker_annotations("utterance_id\ttoken_index\tmarker\trealized\n")
            .empty());
}

TEST_CASE("manifest digest is stable and content-sensitive") {
  std::string u = "utterance_id,speaker_id,textgrid_path,reference_text\n";
  CHECK(manifest_digest(kSpeakersCsv, u) == manifest_digest(kSpeakersCsv, u));
  CHECK(manifest_digest(kSpeakersCsv, u) !=
        manifest_digest(kSpeakersCsv, u + "u1,aa01,g.TextGrid,hi\n"));
}
