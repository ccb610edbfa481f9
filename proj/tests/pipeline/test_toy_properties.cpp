// Properties of decoding with the trained toy models. PABST_TOY_RUN names a
// directory produced by `pabst run-all` (data/, work/, reports/).

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "pabst/experiment.hpp"

using namespace pabst;
namespace fs = std::filesystem;

namespace {

struct ToyRun {
  ExperimentConfig cfg;
  LanguageModel lm;
  ClassifierParams cls;
  StoryIndex index;
  std::vector<DialogExample> prompts;
};

const ToyRun& toy_run() {
  static const ToyRun run = [] {
    const char* dir = std::getenv("PABST_TOY_RUN");
    REQUIRE_MESSAGE(dir != nullptr, "PABST_TOY_RUN is not set");
    ToyRun r;
    r.cfg.data_dir = (fs::path(dir) / "data").string();
    r.cfg.work_dir = (fs::path(dir) / "work").string();
    r.lm = load_checkpoint(r.cfg.lm_path(Regime::kDialog));
    r.cls = ClassifierParams::load(r.cfg.classifier_path());
    r.index = StoryIndex::load(r.cfg.index_path());
    r.prompts = read_dialogs(r.cfg.data_path("prompts"));
    return r;
  }();
  return run;
}

ResponsePlan plan_for(const ToyRun& run, size_t k, const DecodeConfig& cfg) {
  const DialogExample& ex = run.prompts[k];
  return plan_response(run.lm, run.index, ex.history, {"prompt-" + std::to_string(k), ex.persona},
                       cfg);
}

}  // namespace

TEST_CASE("a strong story weight with small gamma copies the story") {
  const ToyRun& run = toy_run();
  REQUIRE(run.prompts.size() >= 50);
  DecodeConfig cfg;
  cfg.lambda_d = 5.0;
  cfg.lambda_c = 0.0;
  cfg.gamma = 0.1;
  size_t matched = 0, positions = 0, runs = 0;
  for (size_t k = 0; runs < 50 && k < run.prompts.size(); ++k) {
    DecodeConfig d = cfg;
    d.seed = derive_seed(17, k);
    const ResponsePlan plan = plan_for(run, k, d);
    // The story labels end with an end-of-sequence id, which a realized
    // response never contains.
    TokenSequence story = plan.story.token_ids;
    if (!story.empty() && story.back() == kEos) story.pop_back();
    if (story.empty() || story.size() >= d.max_length) continue;
    const DecodedResponse r = decode_plan(run.lm, run.cls, plan, d);
    for (size_t i = 0; i < story.size(); ++i) {
      matched += i < r.tokens.size() && r.tokens[i] == story[i] ? 1 : 0;
    }
    positions += story.size();
    ++runs;
  }
  REQUIRE(runs == 50);
  const double rate = static_cast<double>(matched) / static_cast<double>(positions);
  MESSAGE("story positions copied " << matched << "/" << positions << " = " << rate);
  CHECK(rate >= 0.8);
}

TEST_CASE("without constraint weights argmax feeding reproduces the greedy initialization") {
  const ToyRun& run = toy_run();
  DecodeConfig cfg;
  cfg.lambda_d = 0.0;
  cfg.lambda_c = 0.0;
  cfg.soft_input = SoftInput::kArgmax;
  for (size_t k = 0; k < 10; ++k) {
    cfg.seed = derive_seed(3, k);
    const ResponsePlan plan = plan_for(run, k, cfg);
    const Lattice init = init_lattice(run.lm.params, plan.context, cfg);
    const Realized greedy = realize(run.lm, init.states, cfg);
    CHECK(decode_plan(run.lm, run.cls, plan, cfg).text == greedy.text);
  }
}

TEST_CASE("the entailment ablation differs from full decoding only through the entailment term") {
  const ToyRun& run = toy_run();
  DecodeConfig full;
  for (size_t k = 0; k < 10; ++k) {
    full.seed = derive_seed(5, k);
    const ResponsePlan plan = plan_for(run, k, full);
    DecodeConfig ablated = full;
    ablated.lambda_c = 0.0;
    const DecodedResponse a = decode_plan(run.lm, run.cls, plan, ablated);
    const DecodedResponse b = decode_plan(run.lm, ClassifierParams::zeros(run.cls.dim()), plan, full);
    const DecodedResponse c = decode_plan(run.lm, run.cls, plan, full);
    // A zero classifier gives a constant entailment term and a zero gradient.
    CHECK(a.text == b.text);
    REQUIRE(a.trace.size() == c.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
      CHECK(a.trace[i].total == doctest::Approx(-full.lambda_d * a.trace[i].story_ce).epsilon(1e-12));
      CHECK(c.trace[i].total ==
            doctest::Approx(full.lambda_c * c.trace[i].entailment - full.lambda_d * c.trace[i].story_ce)
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("the chosen story exists in the index and the trace has the configured length") {
  const ToyRun& run = toy_run();
  DecodeConfig cfg;
  for (size_t k = 0; k < 5; ++k) {
    cfg.seed = derive_seed(9, k);
    const DialogExample& ex = run.prompts[k];
    const DecodedResponse r =
        pabst_decode(run.lm, run.cls, run.index, ex.history, {"p", ex.persona}, cfg);
    CHECK(r.trace.size() == 5);
    CHECK(run.index.find(r.story_id) != nullptr);
  }
}
