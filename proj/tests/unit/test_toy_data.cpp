#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include "doctest.h"
#include "pabst/jsonl.hpp"
#include "pabst/narrative.hpp"
#include "pabst/toy_data.hpp"

using namespace pabst;

namespace {

size_t shared_content_words(const std::string& a, const std::string& b) {
  const auto wa = content_words(a);
  const auto wb = content_words(b);
  const std::set<std::string> sa(wa.begin(), wa.end());
  const std::set<std::string> sb(wb.begin(), wb.end());
  size_t n = 0;
  for (const auto& w : sa) n += sb.count(w);
  return n;
}

ToySizes small_sizes() {
  ToySizes s;
  s.dialogs = 200;
  s.stories = 120;
  s.personas = 20;
  s.entail_pairs = 300;
  s.prompts = 30;
  return s;
}

size_t line_count(const std::string& path) {
  const std::string text = read_file(path);
  return static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("content words drop stop words and punctuation") {
  CHECK(content_words("I have a dog named Max .") ==
        std::vector<std::string>{"dog", "named", "max"});
}

TEST_CASE("same seed writes byte-identical corpora") {
  const std::string a = "toy_data_a", b = "toy_data_b", c = "toy_data_c";
  write_toy_corpora(generate_toy_corpora(7, small_sizes()), a);
  write_toy_corpora(generate_toy_corpora(7, small_sizes()), b);
  write_toy_corpora(generate_toy_corpora(8, small_sizes()), c);
  for (const char* f : {"personas", "dialogs", "stories", "entail", "prompts"}) {
    const std::string name = std::string("/") + f + ".jsonl";
    CHECK(read_file(a + name) == read_file(b + name));
  }
  CHECK(read_file(a + "/stories.jsonl") != read_file(c + "/stories.jsonl"));
  CHECK(line_count(a + "/dialogs.jsonl") == 200);
  CHECK(line_count(a + "/stories.jsonl") == 120);
  CHECK(line_count(a + "/personas.jsonl") == 20);
  CHECK(line_count(a + "/entail.jsonl") == 300);
  CHECK(line_count(a + "/prompts.jsonl") == 30);

  const ToyCorpora back = read_toy_corpora(a);
  CHECK(back.dialogs.size() == 200);
  CHECK(back.entail.size() == 300);
  for (const std::string& d : {a, b, c}) std::filesystem::remove_all(d);
}

TEST_CASE("entailed pairs share at least two content words") {
  const ToyCorpora c = generate_toy_corpora(3, small_sizes());
  size_t entailed = 0;
  for (const EntailmentPair& p : c.entail) {
    if (!p.entailed) continue;
    ++entailed;
    INFO(p.attribute << " | " << p.response);
    CHECK(shared_content_words(p.attribute, p.response) >= 2);
  }
  CHECK(entailed == 150);
}

TEST_CASE("dialog responses paraphrase a persona attribute") {
  const ToyCorpora c = generate_toy_corpora(4, small_sizes());
  for (const DialogExample& d : c.dialogs) {
    REQUIRE(!d.history.empty());
    CHECK(d.history.back().speaker == Speaker::kUser);
    CHECK(d.persona.size() == 4);
    size_t best = 0;
    for (const std::string& a : d.persona) best = std::max(best, shared_content_words(a, d.response));
    INFO(d.response);
    CHECK(best >= 2);
  }
}

TEST_CASE("every story has a protagonist that rewrites to first person") {
  const ToyCorpora c = generate_toy_corpora(5, small_sizes());
  for (const StoryRecord& s : c.stories) {
    const Story story = personify_story(s.id, s.text);
    INFO(s.text << " => " << story.rewritten_text);
    CHECK(story.warnings.empty());
    CHECK(story.rewritten_text.rfind("I ", 0) == 0);
    const std::string again = personify_story(s.id, story.rewritten_text).rewritten_text;
    CHECK(again == story.rewritten_text);
  }
}
