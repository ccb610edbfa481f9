#include <cmath>

#include "doctest.h"
#include "pabst/common.hpp"
#include "pabst/metrics.hpp"

using namespace pabst;
using Texts = std::vector<std::string>;

TEST_CASE("distinct-n golden values") {
  CHECK(std::abs(distinct_n({"a a b"}, 1) - 200.0 / 3.0) < 1e-9);
  CHECK(std::abs(distinct_n({"a b", "a b"}, 2) - 50.0) < 1e-12);
  CHECK(distinct_n({"a b c", "d e"}, 1) == 100.0);
  CHECK(distinct_n({"a", "b c"}, 2) == 100.0);
  CHECK_THROWS_WITH_AS(distinct_n({"a", "b"}, 2), "no n-grams", ValidationError);
  CHECK(distinct_n({"a a", "b c"}, 1, DistinctMode::kPerResponse) == doctest::Approx(75.0));
}

TEST_CASE("entropy golden values") {
  // "a b a b": unigrams {a:2, b:2}; bigrams {ab:2, ba:1}; trigrams {aba, bab}.
  const double h1 = std::log(2.0);
  const double h2 = -(2.0 / 3.0) * std::log(2.0 / 3.0) - (1.0 / 3.0) * std::log(1.0 / 3.0);
  const double h3 = std::log(2.0);
  CHECK(std::abs(ngram_entropy({"a b a b"}, 1) - h1) < 1e-12);
  CHECK(std::abs(ngram_entropy({"a b a b"}, 2) - h2) < 1e-12);
  CHECK(std::abs(ngram_entropy({"a b a b"}, 3) - h3) < 1e-12);
  CHECK(std::abs(entr({"a b a b"}) - std::cbrt(h1 * h2 * h3)) < 1e-12);
  CHECK(std::abs(entr({"a b a b"}) - 0.674) < 1e-3);
  CHECK(entr({"a a a a"}) == 0.0);
  CHECK_THROWS_AS(entr({"a b"}), ValidationError);
}

TEST_CASE("ENTR is invariant to duplication and order") {
  const Texts r = {"the cat sat on the mat", "a dog ran off", "the dog sat"};
  Texts doubled = r;
  doubled.insert(doubled.end(), r.begin(), r.end());
  CHECK(entr(doubled) == doctest::Approx(entr(r)).epsilon(1e-12));
  const Texts reordered = {r[2], r[0], r[1]};
  CHECK(entr(reordered) == doctest::Approx(entr(r)).epsilon(1e-12));
  CHECK(entr(r) >= 0.0);
}

TEST_CASE("overlap F1") {
  CHECK(overlap_f1("I like tea .", "I like tea .") == 1.0);
  CHECK(overlap_f1("a b", "c d") == 0.0);
  CHECK(overlap_f1("a b", "a c") == 0.5);
  CHECK(overlap_f1("a a b", "a c d") == overlap_f1("a c d", "a a b"));
}

TEST_CASE("system scoring and table") {
  const SystemMetrics m = score_system({"a b c", "a b d"}, {"a b c", "x"});
  CHECK(m.n == 2);
  CHECK(m.d1 == doctest::Approx(100.0 * 4.0 / 6.0));
  CHECK(m.mean_overlap_f1 == doctest::Approx(0.5));
  const std::string table = format_table({{"base", m}, {"pabst", m}});
  CHECK(table.find("pabst") != std::string::npos);
  CHECK(metrics_to_json(m).at("n") == 2);
}
