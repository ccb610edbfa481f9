#include <string>
#include <vector>

#include "doctest.h"
#include "pabst/common.hpp"
#include "pabst/narrative.hpp"
#include "pabst/text.hpp"
#include "pabst/vocab.hpp"
#include "support/rewrite_golden.hpp"

using namespace pabst;
using pabst::testing::Golden;
using pabst::testing::golden_table;

namespace {

std::vector<std::string> mention_surfaces(const ProtagonistResult& r) {
  std::vector<std::string> out;
  for (const CharacterMention& m : r.mentions) out.push_back(m.surface);
  return out;
}

}  // namespace

TEST_CASE("bundled name table knows common names") {
  const NameTable& names = NameTable::bundled();
  CHECK(names.size() > 200);
  CHECK(names.gender("Tom") == Gender::kMale);
  CHECK(names.gender("mary") == Gender::kFemale);
  CHECK(names.gender("Zorblax") == Gender::kUnknown);
}

TEST_CASE("protagonist is the most frequent character") {
  const ProtagonistResult r = find_protagonist("John went out. Mary waved. John smiled.");
  REQUIRE(r.name.has_value());
  CHECK(*r.name == "John");
}

TEST_CASE("pronouns join the protagonist's mentions") {
  const ProtagonistResult r = find_protagonist("Tom lost his keys. He was upset.");
  REQUIRE(r.name.has_value());
  CHECK(*r.name == "Tom");
  CHECK(mention_surfaces(r) == std::vector<std::string>{"Tom", "his", "He"});
  CHECK(r.mentions[1].slot == GrammaticalSlot::kPossessive);
  CHECK(r.mentions[2].slot == GrammaticalSlot::kSubject);
}

TEST_CASE("text without characters has no protagonist") {
  const ProtagonistResult r = find_protagonist("It rained all day.");
  CHECK_FALSE(r.name.has_value());
  CHECK(r.mentions.empty());
}

TEST_CASE("ties go to the earliest first mention") {
  const ProtagonistResult r = find_protagonist("Bob met Alice. Alice laughed. Bob left.");
  REQUIRE(r.name.has_value());
  CHECK(*r.name == "Bob");
}

TEST_CASE("places after locative prepositions are not characters") {
  const ProtagonistResult r = find_protagonist("Kate flew to Rome. She liked Rome.");
  REQUIRE(r.name.has_value());
  CHECK(*r.name == "Kate");
}

TEST_CASE("first-person text maps to the narrator") {
  const ProtagonistResult r = find_protagonist("I went home. My dog was happy.");
  REQUIRE(r.name.has_value());
  CHECK(*r.name == "I");
}

TEST_CASE("possessive pronoun alone") {
  CHECK(first_personify("his books", pronoun_chain_mentions("his books")).rewritten_text ==
        "my books");
}

TEST_CASE("rewriting golden table") {
  for (const Golden& g : golden_table()) {
    CAPTURE(g.raw);
    const Story s = personify_story("g", g.raw);
    CHECK(s.rewritten_text == g.rewritten);
  }
}

TEST_CASE("rewriting is idempotent") {
  for (const Golden& g : golden_table()) {
    CAPTURE(g.raw);
    const Story once = personify_story("g", g.raw);
    const Story twice = personify_story("g", once.rewritten_text);
    CHECK(twice.rewritten_text == once.rewritten_text);
    CHECK(twice.trace.empty());
  }
}

TEST_CASE("mentions of other characters are untouched") {
  const Story s = personify_story("x", "Tom helped Mary. Tom thanked her. She smiled at him.");
  CHECK(s.rewritten_text == "I helped Mary. I thanked her. She smiled at me.");
}

TEST_CASE("trace records every edit in order") {
  const std::string raw = "John went to the store. He bought his milk.";
  const Story s = personify_story("s1", raw);
  REQUIRE(s.trace.size() == 3);
  size_t prev = 0;
  for (const RewriteEdit& e : s.trace) {
    CHECK(e.begin >= prev);
    CHECK(raw.substr(e.begin, e.end - e.begin) == e.original);
    prev = e.end;
  }
  CHECK(s.trace[0].rule == "subject-name");
  CHECK(s.trace[2].rule == "possessive-pronoun");
}

TEST_CASE("no protagonist falls back to the pronoun chain with a warning") {
  const Story s = personify_story("p", "It was late. He walked home. He sleeps now.");
  CHECK(s.rewritten_text == "It was late. I walked home. I sleep now.");
  CHECK_FALSE(s.warnings.empty());
  const Story plain = personify_story("q", "It rained all day.");
  CHECK(plain.rewritten_text == "It rained all day.");
}

TEST_CASE("inconsistent mention sets are rejected") {
  const std::string text = "Tom ran.";
  CharacterMention a{"Tom", 0, 1, MentionKind::kProperName, GrammaticalSlot::kSubject};
  CharacterMention out_of_range{"x", 2, 5, MentionKind::kPronoun, GrammaticalSlot::kSubject};
  CHECK_THROWS_WITH_AS(first_personify(text, {a, a}), "inconsistent mention set",
                       ValidationError);
  CHECK_THROWS_AS(first_personify(text, {out_of_range}), ValidationError);
}

TEST_CASE("story token ids re-derive from the rewritten text") {
  Story s = personify_story("e", "Tom likes tea. Tea pleases him.");
  const Vocabulary v = build_vocab({s.rewritten_text}, 100);
  encode_story(s, v);
  std::vector<TokenId> expected = v.encode(s.rewritten_text);
  expected.push_back(kEos);
  CHECK(s.token_ids == expected);
  CHECK(v.decode(s.token_ids) == s.rewritten_text);
}
