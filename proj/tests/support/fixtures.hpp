// Small random models and inputs shared by the unit and acceptance tests.
#ifndef PABST_TESTS_FIXTURES_HPP_
#define PABST_TESTS_FIXTURES_HPP_

#include <span>
#include <string>
#include <vector>

#include "pabst/checkpoint.hpp"
#include "pabst/common.hpp"
#include "pabst/consistency.hpp"

namespace pabst::testing {

inline LanguageModel tiny_model(uint64_t seed, uint32_t d = 8, size_t words = 13) {
  std::vector<std::string> tokens = reserved_token_names();
  for (size_t i = 0; i < words; ++i) tokens.push_back("w" + std::to_string(i));
  Vocabulary vocab(tokens);
  ModelShape shape;
  shape.d_model = d;
  shape.n_layers = 1;
  shape.n_heads = 2;
  shape.vocab_size = static_cast<uint32_t>(vocab.size());
  shape.max_positions = 32;
  return {vocab, LMParams::random(shape, seed)};
}

inline Matrix random_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * standard_normal(rng);
  return m;
}

inline ClassifierParams random_classifier(size_t d, Rng& rng) {
  ClassifierParams p = ClassifierParams::zeros(d);
  const auto n = static_cast<Eigen::Index>(d);
  p.M = random_rows(n, n, rng, 0.3);
  p.a = random_rows(n, 1, rng, 0.3);
  p.b = random_rows(n, 1, rng, 0.3);
  p.bias = 0.3 * standard_normal(rng);
  return p;
}

inline TokenSequence random_story(size_t n, uint32_t vocab, Rng& rng) {
  TokenSequence s;
  for (size_t i = 0; i < n; ++i) {
    s.push_back(static_cast<TokenId>(kNumReserved + uniform_index(rng, vocab - kNumReserved)));
  }
  return s;
}

inline ModelShape small_shape(uint32_t d = 16, uint32_t layers = 2, uint32_t vocab = 30,
                              uint32_t positions = 32) {
  ModelShape s;
  s.d_model = d;
  s.n_layers = layers;
  s.n_heads = 2;
  s.vocab_size = vocab;
  s.max_positions = positions;
  return s;
}

// Random params with non-trivial layer-norm and bias values so every
// tensor participates in the gradient check.
inline LMParams perturbed_params(const ModelShape& shape, uint64_t seed) {
  LMParams p = LMParams::random(shape, seed);
  Rng rng(seed + 1);
  p.for_each_tensor([&rng](std::string_view, std::span<double> t) {
    for (double& v : t) v += 0.05 * standard_normal(rng);
  });
  return p;
}

}  // namespace pabst::testing

#endif  // PABST_TESTS_FIXTURES_HPP_
