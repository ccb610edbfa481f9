#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pabst/retrieval.hpp"
#include "pabst/jsonl.hpp"
#include "support/planted.hpp"

using namespace pabst;

namespace {

const LanguageModel& model() {
  static const LanguageModel lm = testing::synthetic_model(200, 3, 0.3);
  return lm;
}

}  // namespace

TEST_CASE("embed_tokens shapes and determinism") {
  CHECK(embed_tokens(model(), "w5").rows() == 1);
  CHECK(embed_tokens(model(), "w1 w2 w3") == embed_tokens(model(), "w1 w2 w3"));
  const Matrix ab = embed_tokens(model(), "w1 w2");
  const Matrix ba = embed_tokens(model(), "w2 w1");
  CHECK(ab != ba);
  CHECK(ab.row(0) != ba.row(1));
  CHECK_THROWS_WITH_AS(embed_tokens(model(), "  "), "no content tokens", ValidationError);
}

TEST_CASE("greedy matching on hand-built rows") {
  Matrix e1(1, 2), both(2, 2);
  e1 << 1, 0;
  both << 1, 0, 0, 1;
  const MatchScore s = greedy_match_f1(e1, both);
  CHECK(s.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const MatchScore swapped = greedy_match_f1(both, e1);
  CHECK(swapped.precision == s.recall);
  CHECK(swapped.recall == s.precision);
  CHECK(swapped.f1 == s.f1);

  Matrix zero = Matrix::Zero(1, 2);
  CHECK_THROWS_WITH_AS(greedy_match_f1(zero, both), "degenerate embedding", ValidationError);
}

TEST_CASE("self-match scores one") {
  const Matrix a = embed_tokens(model(), "w3 w9 w27 w4");
  const MatchScore s = greedy_match_f1(a, a);
  CHECK(std::abs(s.f1 - 1.0) < 1e-9);
  const Matrix b = embed_tokens(model(), "w8 w1");
  CHECK(greedy_match_f1(a, b).f1 == doctest::Approx(greedy_match_f1(b, a).f1).epsilon(1e-12));
  CHECK(greedy_match_f1(a, b).f1 <=
        std::max(greedy_match_f1(a, b).precision, greedy_match_f1(a, b).recall));
}

TEST_CASE("index build, duplicates and round-trip") {
  const std::vector<StoryRecord> stories = {
      {"a", "w1 w2 w3"}, {"b", "w4 w5"}, {"c", "w1 w2 w3"}};
  const StoryIndex index = index_stories(model(), stories);
  REQUIRE(index.size() == 3);
  CHECK(index.entries()[0].embeddings == index.entries()[2].embeddings);

  const std::string path = "test_retrieval_roundtrip.idx";
  index.save(path);
  const StoryIndex back = StoryIndex::load(path);
  REQUIRE(back.size() == 3);
  CHECK(back.model_fingerprint() == index.model_fingerprint());
  for (const char* q : {"w1", "w5 w9", "w2 w3 w100"}) {
    const RetrievalResult x = retrieve(index, model(), q);
    const RetrievalResult y = retrieve(back, model(), q);
    CHECK(x.story->id == y.story->id);
    CHECK(x.score.f1 == y.score.f1);
  }
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back.entries()[i].embeddings == index.entries()[i].embeddings);
    CHECK(back.entries()[i].text == index.entries()[i].text);
  }
}

TEST_CASE("retrieve picks the verbatim story and breaks ties by id") {
  const StoryIndex index =
      index_stories(model(), {{"z", "w7 w8 w9"}, {"m", "w10 w11"}, {"b", "w7 w8 w9"}});
  const RetrievalResult r = retrieve(index, model(), "w7 w8 w9");
  CHECK(r.story->id == "b");
  CHECK(std::abs(r.score.f1 - 1.0) < 1e-9);

  const StoryIndex single = index_stories(model(), {{"only", "w50 w51"}});
  CHECK(retrieve(single, model(), "w1").story->id == "only");
  CHECK_THROWS_AS(retrieve(StoryIndex(), model(), "w1"), ValidationError);
}

TEST_CASE("retrieval is invariant to entry order and irrelevant additions") {
  std::vector<StoryRecord> stories = {{"s1", "w1 w2 w3 w4"}, {"s2", "w5 w6 w7"},
                                      {"s3", "w8 w9 w1"}};
  const std::string q = "w1 w2 w40";
  const StoryIndex original = index_stories(model(), stories);
  const RetrievalResult base = retrieve(original, model(), q);
  std::reverse(stories.begin(), stories.end());
  const StoryIndex reversed = index_stories(model(), stories);
  CHECK(retrieve(reversed, model(), q).story->id == base.story->id);
  stories.push_back({"s4", "w150 w151 w152"});
  const StoryIndex grown = index_stories(model(), stories);
  const RetrievalResult extra = retrieve(grown, model(), q);
  REQUIRE(greedy_match_f1(embed_tokens(model(), q), grown.find("s4")->embeddings).f1 <
          base.score.f1);
  CHECK(extra.story->id == base.story->id);
}

TEST_CASE("planted story ranks first") {
  int hits = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const testing::PlantedCase c = testing::planted_case(200, seed);
    const StoryIndex index = index_stories(model(), c.stories);
    hits += retrieve(index, model(), c.query).story->id == c.planted_id ? 1 : 0;
  }
  CHECK(hits >= 19);
}

TEST_CASE("corpus parse errors carry line numbers") {
  write_file("test_retrieval_bad.jsonl", "{\"id\":\"a\",\"text\":\"w1\"}\n{\"id\":\"b\"}\n");
  CHECK_THROWS_WITH_AS(read_story_corpus("test_retrieval_bad.jsonl"),
                       doctest::Contains(":2:"), ValidationError);
}
