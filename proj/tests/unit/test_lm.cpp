#include <cstdio>
#include <span>
#include <vector>

#include "doctest.h"
#include "pabst/checkpoint.hpp"
#include "pabst/lm.hpp"
#include "pabst/lm_decode.hpp"
#include "pabst/lm_train.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace pabst;
using namespace pabst::testing;

TEST_CASE("forward returns one state row per input") {
  const LMParams p = LMParams::random(small_shape(), 1);
  const ForwardResult r = forward(p, {kBos});
  CHECK(r.states.rows() == 1);
  CHECK(r.logits.cols() == 30);
}

TEST_CASE("forward is deterministic and causal") {
  const LMParams p = LMParams::random(small_shape(), 2);
  const TokenSequence a = {kBos, 10, 11, 12, 13};
  TokenSequence b = a;
  b[4] = 20;
  const ForwardResult ra = forward(p, a);
  const ForwardResult ra2 = forward(p, a);
  CHECK(ra.states == ra2.states);
  CHECK(ra.logits == ra2.logits);
  const ForwardResult rb = forward(p, b);
  CHECK(ra.states.topRows(4) == rb.states.topRows(4));
  CHECK(ra.states.row(4) != rb.states.row(4));
}

TEST_CASE("logits are the tied embedding applied to each state") {
  const LMParams p = LMParams::random(small_shape(), 3);
  const ForwardResult r = forward(p, {kBos, 8, 9});
  for (Eigen::Index i = 0; i < r.states.rows(); ++i) {
    const RowVector direct = r.states.row(i) * p.token_embedding.transpose();
    CHECK((direct - r.logits.row(i)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward rejects prefixes beyond the position limit") {
  const LMParams p = LMParams::random(small_shape(16, 1, 30, 4), 4);
  CHECK_THROWS_AS(forward(p, {kBos, 8, 9, 10, 11}), ValidationError);
}

TEST_CASE("forward_soft with one-hot rows equals hard forward") {
  const LMParams p = LMParams::random(small_shape(), 5);
  const TokenSequence prefix = {kBos, 9};
  const TokenSequence suffix = {12, 17, 21};
  Matrix soft = Matrix::Zero(3, 30);
  for (size_t i = 0; i < suffix.size(); ++i) soft(static_cast<Eigen::Index>(i), suffix[i]) = 1.0;
  TokenSequence all = prefix;
  all.insert(all.end(), suffix.begin(), suffix.end());
  CHECK(forward_soft(p, prefix, soft) == forward(p, all).states);
}

TEST_CASE("uniform soft row consumes the mean embedding") {
  const LMParams p = LMParams::random(small_shape(), 6);
  const RowVector uniform = RowVector::Constant(30, 1.0 / 30.0);
  const RowVector mean = p.token_embedding.colwise().mean();
  CHECK((expected_embedding(p, uniform) - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("soft mixture of two identical embeddings equals either one") {
  LMParams p = LMParams::random(small_shape(), 7);
  p.token_embedding.row(11) = p.token_embedding.row(10);
  Matrix half = Matrix::Zero(1, 30);
  half(0, 10) = 0.5;
  half(0, 11) = 0.5;
  Matrix one = Matrix::Zero(1, 30);
  one(0, 10) = 1.0;
  const Matrix a = forward_soft(p, {kBos}, half);
  const Matrix b = forward_soft(p, {kBos}, one);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward_soft rejects rows that are not distributions") {
  const LMParams p = LMParams::random(small_shape(), 8);
  Matrix bad = Matrix::Zero(1, 30);
  bad(0, 9) = 0.7;
  CHECK_THROWS_AS(forward_soft(p, {kBos}, bad), ValidationError);
}

TEST_CASE("training gradients match central finite differences") {
  ModelShape shape = small_shape(8, 1, 20, 12);
  const LMParams params = perturbed_params(shape, 11);
  const std::vector<TrainExample> batch = {
      {{kBos, 7, 8, kPersona, 9}, {10, 11, kEos}},
      {{kBos, 12}, {13, 14, 15, 16, kEos}},
  };
  LMParams grad;
  loss_and_gradient(params, batch, &grad);

  LMParams probe = params;
  std::vector<std::span<double>> probe_spans, grad_spans;
  probe.for_each_tensor([&](std::string_view, std::span<double> t) { probe_spans.push_back(t); });
  grad.for_each_tensor([&](std::string_view, std::span<double> t) { grad_spans.push_back(t); });
  auto loss = [&]() { return loss_and_gradient(probe, batch, nullptr); };
  double worst = 0.0;
  for (size_t t = 0; t < probe_spans.size(); ++t) {
    for (size_t i = 0; i < probe_spans[t].size(); ++i) {
      const double numeric = testing::central_difference(&probe_spans[t][i], loss);
      worst = std::max(worst, testing::relative_error(grad_spans[t][i], numeric));
    }
  }
  MESSAGE("max relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("zero training steps return the initial parameters") {
  const LMParams init = LMParams::random(small_shape(), 12);
  TrainConfig cfg;
  cfg.steps = 0;
  const TrainResult r = train_lm({{{kBos}, {9, kEos}}}, init, cfg);
  CHECK(r.params == init);
  CHECK(r.loss_curve.empty());
}

TEST_CASE("training rejects oversize examples and a diverging learning rate") {
  const LMParams init = LMParams::random(small_shape(16, 1, 30, 6), 13);
  TrainConfig cfg;
  cfg.steps = 2;
  CHECK_THROWS_AS(train_lm({{{kBos, 8, 9, 10}, {11, 12, 13, kEos}}}, init, cfg),
                  ValidationError);
  cfg.learning_rate = 1e308;
  cfg.warmup_steps = 0;
  cfg.clip_norm = 1e308;
  cfg.steps = 50;
  CHECK_THROWS_AS(train_lm({{{kBos, 8}, {11, 12, kEos}}}, init, cfg), NumericError);
}

TEST_CASE("memorization run and greedy reproduction") {
  ModelShape shape = small_shape(32, 2, 40, 32);
  const TrainExample pair{{kBos, kUser, 10, 11, 12, kPersona, 13, 14, kAgent},
                          {20, 21, 22, 23, 24, 25, kEos}};
  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.batch_size = 1;
  cfg.learning_rate = 3e-3;
  cfg.seed = 5;
  const TrainResult r = train_lm({pair}, LMParams::random(shape, 21), cfg);
  const double ppl = target_perplexity(r.params, {pair});
  MESSAGE("memorized perplexity " << ppl);
  CHECK(ppl < 1.1);

  const GreedyResult g = greedy_decode(r.params, pair.context, 10);
  CHECK(g.tokens == pair.target);
  CHECK(g.states.rows() == static_cast<Eigen::Index>(g.tokens.size()));
  for (Eigen::Index i = 0; i < g.states.rows(); ++i) {
    CHECK(argmax(project_logits(r.params, g.states.row(i))) == g.tokens[i]);
  }
  const GreedyResult again = greedy_decode(r.params, pair.context, 10);
  CHECK(again.tokens == g.tokens);
  CHECK(again.states == g.states);

  // A tiny nucleus keeps only the top token, so sampling collapses to argmax.
  CHECK(nucleus_decode(r.params, pair.context, 1e-9, 10, 99) == g.tokens);
}

TEST_CASE("greedy decode edge cases") {
  const LMParams p = LMParams::random(small_shape(16, 1, 30, 8), 31);
  CHECK(greedy_decode(p, {kBos}, 0).tokens.empty());
  CHECK_THROWS_AS(greedy_decode(p, {kBos, 8, 9, 10, 11}, 5), ValidationError);
  const GreedyResult full = greedy_decode(p, {kBos}, 7, false);
  CHECK(full.tokens.size() == 7);
}

TEST_CASE("nucleus decoding is seeded and validates p") {
  const LMParams p = LMParams::random(small_shape(), 32);
  const TokenSequence ctx = {kBos, 9, 10};
  CHECK(nucleus_decode(p, ctx, 1.0, 12, 4) == nucleus_decode(p, ctx, 1.0, 12, 4));
  CHECK_THROWS_AS(nucleus_decode(p, ctx, 0.0, 5, 1), ValidationError);
  CHECK_THROWS_AS(nucleus_decode(p, ctx, 1.5, 5, 1), ValidationError);
}

TEST_CASE("nucleus set is the smallest prefix reaching p") {
  RowVector probs(4);
  probs << 0.1, 0.5, 0.3, 0.1;
  CHECK(nucleus_set(probs, 0.4) == std::vector<TokenId>{1});
  CHECK(nucleus_set(probs, 0.8) == std::vector<TokenId>{1, 2});
  CHECK(nucleus_set(probs, 0.85) == std::vector<TokenId>{1, 2, 0});
  CHECK(nucleus_set(probs, 1.0).size() == 4);
}

TEST_CASE("checkpoint round-trip is lossless") {
  const Vocabulary vocab = build_vocab({"a b c d e f g h i j k l m n o p q r s t u v w"}, 30);
  ModelShape shape = small_shape(16, 2, static_cast<uint32_t>(vocab.size()), 16);
  const LanguageModel model{vocab, LMParams::random(shape, 41)};
  const std::string path = "test_lm_roundtrip.ckpt";
  save_checkpoint(path, model);
  const LanguageModel back = load_checkpoint(path);
  CHECK(back.vocab == vocab);
  CHECK(back.params == model.params);

  std::FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f != nullptr);
  char magic[8];
  REQUIRE(std::fread(magic, 1, 8, f) == 8);
  std::fclose(f);
  CHECK(std::string(magic, 8) == std::string("PBSTLM1\0", 8));
}
