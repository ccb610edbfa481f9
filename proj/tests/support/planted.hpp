#ifndef PABST_TESTS_PLANTED_HPP_
#define PABST_TESTS_PLANTED_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "pabst/checkpoint.hpp"
#include "pabst/common.hpp"
#include "pabst/retrieval.hpp"

namespace pabst::testing {

// A synthetic vocabulary "w0 .. w{n-1}" and a random decoder over it. The
// residual branches are scaled by branch_scale; small values give states
// dominated by token identity, as in a trained model's lower layers.
inline LanguageModel synthetic_model(size_t words, uint64_t seed, double branch_scale = 1.0) {
  std::vector<std::string> tokens = reserved_token_names();
  for (size_t i = 0; i < words; ++i) tokens.push_back("w" + std::to_string(i));
  Vocabulary vocab(tokens);
  ModelShape shape;
  shape.vocab_size = static_cast<uint32_t>(vocab.size());
  LMParams params = LMParams::random(shape, seed);
  for (LayerParams& layer : params.layers) {
    layer.w_attn_out *= branch_scale;
    layer.w_proj *= branch_scale;
  }
  return {vocab, params};
}

struct PlantedCase {
  std::string query;
  std::vector<StoryRecord> stories;
  std::string planted_id;
};

// Query of 6 words; one story shares 4 of them, nine share none.
inline PlantedCase planted_case(size_t words, uint64_t seed) {
  Rng rng(seed);
  std::vector<size_t> pool(words);
  for (size_t i = 0; i < words; ++i) pool[i] = i;
  for (size_t i = pool.size() - 1; i > 0; --i) {
    std::swap(pool[i], pool[uniform_index(rng, i + 1)]);
  }
  auto word = [](size_t i) { return "w" + std::to_string(i); };
  const std::vector<size_t> query(pool.begin(), pool.begin() + 6);
  const std::vector<size_t> others(pool.begin() + 6, pool.end());
  auto draw_other = [&]() { return word(others[uniform_index(rng, others.size())]); };

  PlantedCase c;
  for (size_t q : query) c.query += (c.query.empty() ? "" : " ") + word(q);
  const size_t planted_slot = uniform_index(rng, 10);
  for (size_t s = 0; s < 10; ++s) {
    std::vector<std::string> text;
    for (int k = 0; k < 10; ++k) text.push_back(draw_other());
    if (s == planted_slot) {
      for (int k = 0; k < 4; ++k) {
        text.insert(text.begin() + static_cast<long>(uniform_index(rng, text.size() + 1)),
                    word(query[k]));
      }
    }
    std::string joined;
    for (const std::string& t : text) joined += (joined.empty() ? "" : " ") + t;
    StoryRecord r{"story-" + std::to_string(s), joined};
    if (s == planted_slot) c.planted_id = r.id;
    c.stories.push_back(r);
  }
  return c;
}

}  // namespace pabst::testing

#endif  // PABST_TESTS_PLANTED_HPP_
