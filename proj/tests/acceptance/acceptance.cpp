// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
//
// usage: acceptance [reference_run_dir]
// The reference run (data/, work/, reports/) is produced by `pabst run-all`;
// without one, a first run is made here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pabst/experiment.hpp"
#include "pabst/lm_decode.hpp"
#include "pabst/metrics.hpp"
#include "pabst/narrative.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/planted.hpp"
#include "support/rewrite_golden.hpp"

using namespace pabst;
using namespace pabst::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failed = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++g_failed;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig run_config(const fs::path& dir) {
  ExperimentConfig cfg;
  cfg.data_dir = (dir / "data").string();
  cfg.work_dir = (dir / "work").string();
  cfg.report_dir = (dir / "reports").string();
  return cfg;
}

// Relative path -> contents for every file under root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  }
  return out;
}

struct PipelineRun {
  EvalReport report;
  std::vector<SweepRow> sweep;
  double sweep_seconds = 0.0;
};

PipelineRun run_pipeline(const ExperimentConfig& cfg) {
  run_gen_data(cfg);
  run_train_lm(cfg, Regime::kDialog);
  run_index(cfg);
  run_train_classifier(cfg);
  run_train_lm(cfg, Regime::kPseudo);
  run_train_lm(cfg, Regime::kMultitask);
  PipelineRun r;
  r.report = run_eval(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  r.sweep = run_sweep(cfg);
  r.sweep_seconds = seconds_since(t0);
  return r;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const LanguageModel lm = tiny_model(1);
  if (lm.params.shape.vocab_size != 20 || lm.params.shape.d_model != 8) return {false, "bad shape"};
  DecodeConfig cfg;
  cfg.lambda_c = 1.0;
  cfg.lambda_d = 1.0;
  Rng rng(2);
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    Matrix states = random_rows(6, 8, rng);
    const TokenSequence story = random_story(1 + uniform_index(rng, 8), 20, rng);
    const RowVector attr = random_rows(1, 8, rng).row(0);
    const ClassifierParams cls = random_classifier(8, rng);
    const Matrix g = constraint_gradient(lm.params, states, story, attr, cls, cfg);
    for (Eigen::Index i = 0; i < states.size(); ++i) {
      const double numeric = central_difference(&states.data()[i], [&]() {
        return constraint_loss(lm.params, states, story, attr, cls, cfg).total;
      });
      worst = std::max(worst, relative_error(g.data()[i], numeric));
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("max relative error %.3g over 100 instances (< 1e-4), %.2f s (< 30 s)", worst, secs)};
}

Outcome lm_trainer() {
  const auto t0 = std::chrono::steady_clock::now();
  const LMParams params = perturbed_params(small_shape(8, 1, 20, 12), 11);
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
      worst = std::max(worst, relative_error(grad_spans[t][i], central_difference(&probe_spans[t][i], loss)));
    }
  }

  const TrainExample pair{{kBos, kUser, 10, 11, 12, kPersona, 13, 14, kAgent},
                          {20, 21, 22, 23, 24, 25, kEos}};
  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.batch_size = 1;
  cfg.learning_rate = 3e-3;
  cfg.seed = 5;
  const TrainResult r = train_lm({pair}, LMParams::random(small_shape(32, 2, 40, 32), 21), cfg);
  const double ppl = target_perplexity(r.params, {pair});
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && ppl < 1.1 && secs < 120.0,
          fmt("gradient max relative error %.3g (< 1e-4); perplexity %.6f after %zu steps (< 1.1); "
              "%.1f s (< 120 s)",
              worst, ppl, cfg.steps, secs)};
}

Outcome constraint_ascent() {
  const LanguageModel lm = tiny_model(7);
  DecodeConfig cfg;
  cfg.step_size = 0.01;
  cfg.backward_steps = 3;
  DecodeConfig one = cfg;
  one.backward_steps = 1;
  int ascending = 0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(1000 + seed);
    Matrix states = random_rows(6, 8, rng);
    const TokenSequence story = random_story(1 + uniform_index(rng, 8), 20, rng);
    const RowVector attr = random_rows(1, 8, rng).row(0);
    const ClassifierParams cls = random_classifier(8, rng);
    bool ok = true;
    double prev = constraint_loss(lm.params, states, story, attr, cls, cfg).total;
    for (size_t k = 0; k < cfg.backward_steps; ++k) {
      states = backward_pass(lm.params, states, story, attr, cls, one);
      const double now = constraint_loss(lm.params, states, story, attr, cls, cfg).total;
      ok = ok && now >= prev;
      prev = now;
    }
    ascending += ok ? 1 : 0;
  }
  return {ascending >= 190, fmt("%d/200 instances non-decreasing at step 0.01 (>= 190)", ascending)};
}

Outcome lambda_ordering(const PipelineRun& run) {
  std::string detail;
  bool increasing = true;
  double prev = -1.0;
  for (const SweepRow& row : run.sweep) {
    detail += fmt("lambda_d=%g overlap %.6f n %zu; ", row.lambda_d, row.metrics.mean_overlap_f1,
                  row.metrics.n);
    increasing = increasing && row.metrics.mean_overlap_f1 > prev && row.metrics.n >= 100;
    prev = row.metrics.mean_overlap_f1;
  }
  const bool grid = run.sweep.size() == 3 && run.sweep[0].lambda_d == 0.05 &&
                    run.sweep[1].lambda_d == 1.0 && run.sweep[2].lambda_d == 5.0;
  detail += fmt("sweep %.1f s (< 600 s)", run.sweep_seconds);
  return {grid && increasing && run.sweep_seconds < 600.0, detail};
}

Outcome diversity_ordering(const PipelineRun& run) {
  std::map<std::string, SystemMetrics> m;
  for (const SystemResult& s : run.report.systems) m[s.name] = s.metrics;
  const SystemMetrics& p = m.at("pabst");
  const SystemMetrics& n = m.at("nucleus");
  std::string top;
  double top_entr = -1.0;
  for (const auto& [name, metrics] : m) {
    if (metrics.entr > top_entr) {
      top_entr = metrics.entr;
      top = name;
    }
  }
  bool retrieval_top = true;
  for (const auto& [name, metrics] : m) {
    if (name != "retrieval") retrieval_top = retrieval_top && m.at("retrieval").entr > metrics.entr;
  }
  const bool pabst_over_nucleus = p.entr > n.entr && p.d1 > n.d1 && p.d2 > n.d2;
  std::string detail = fmt(
      "pabst ENTR %.4f D-1 %.3f D-2 %.3f vs nucleus ENTR %.4f D-1 %.3f D-2 %.3f (%s); "
      "retrieval ENTR %.4f, highest is %s %.4f",
      p.entr, p.d1, p.d2, n.entr, n.d1, n.d2, pabst_over_nucleus ? "all higher" : "not all higher",
      m.at("retrieval").entr, top.c_str(), top_entr);
  return {pabst_over_nucleus && retrieval_top, detail};
}

Outcome metric_goldens() {
  const double d1 = distinct_n({"a a b"}, 1);
  const double e = entr({"a b a b"});
  const LanguageModel lm = tiny_model(3, 8, 43);  // V = 50
  const ClassifierParams cls = ClassifierParams::zeros(8);
  const LossBreakdown uniform = constraint_loss(lm.params, Matrix::Zero(4, 8),
                                                {10, 11, 12, 13, 14, 15}, RowVector::Zero(8), cls,
                                                DecodeConfig());
  const double ce_target = 4.0 * std::log(50.0);
  const bool ok = std::abs(d1 - 200.0 / 3.0) < 1e-9 && std::abs(e - 0.674) < 1e-3 &&
                  std::abs(uniform.story_ce - ce_target) < 1e-9;
  return {ok, fmt("distinct_1 %.12f (200/3 +- 1e-9); ENTR %.6f (0.674 +- 1e-3); uniform CE %.12f "
                  "(4 ln 50 = %.12f +- 1e-9)",
                  d1, e, uniform.story_ce, ce_target)};
}

Outcome retrieval() {
  const LanguageModel model = synthetic_model(200, 3, 0.3);
  const Matrix a = embed_tokens(model, "w3 w9 w27 w4");
  const double self = greedy_match_f1(a, a).f1;
  int hits = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const PlantedCase c = planted_case(200, seed);
    const StoryIndex index = index_stories(model, c.stories);
    hits += retrieve(index, model, c.query).story->id == c.planted_id ? 1 : 0;
  }
  return {std::abs(self - 1.0) < 1e-9 && hits >= 95,
          fmt("self-match f1 %.15f (1 +- 1e-9); planted story first in %d/100 (>= 95)", self, hits)};
}

Outcome perspective_rewriting() {
  size_t exact = 0, idempotent = 0;
  std::string first_miss;
  for (const Golden& g : golden_table()) {
    const Story once = personify_story("g", g.raw);
    if (once.rewritten_text == g.rewritten) {
      ++exact;
    } else if (first_miss.empty()) {
      first_miss = std::string(" first miss: '") + g.raw + "' -> '" + once.rewritten_text + "'";
    }
    const Story twice = personify_story("g", once.rewritten_text);
    if (twice.rewritten_text == once.rewritten_text && twice.trace.empty()) ++idempotent;
  }
  const size_t n = golden_table().size();
  return {n == 20 && exact == n && idempotent == n,
          fmt("%zu/%zu exact, %zu/%zu idempotent", exact, n, idempotent, n) + first_miss};
}

Outcome determinism(const fs::path& a, const fs::path& b) {
  const auto x = snapshot(a / "reports");
  const auto y = snapshot(b / "reports");
  size_t same = 0;
  std::string diff;
  for (const auto& [path, bytes] : x) {
    const auto it = y.find(path);
    if (it != y.end() && it->second == bytes) {
      ++same;
    } else if (diff.empty()) {
      diff = " first difference: " + path;
    }
  }
  const bool has_core = x.count("report.json") && x.count("transcripts.jsonl") && x.count("sweep.json");
  return {has_core && x.size() == y.size() && same == x.size(),
          fmt("%zu/%zu report files byte-identical across two runs", same, x.size()) + diff};
}

Outcome gamma_identity() {
  int identical = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const LanguageModel lm = tiny_model(100 + seed);
    Rng rng(200 + seed);
    const TokenSequence context = {kBos, 9, 10, kPersona, 11, kAgent};
    const Matrix backward = random_rows(7, 8, rng);
    DecodeConfig cfg;
    cfg.gamma = 1.0;
    const Matrix mixed = forward_mix_pass(lm.params, context, backward, cfg);
    // Unconstrained forward: each response position consumes the previous
    // position's own expected embedding.
    Matrix soft(6, lm.params.shape.vocab_size);
    for (Eigen::Index j = 0; j < 6; ++j) {
      soft.row(j) = softmax(project_logits(lm.params, mixed.row(j)), cfg.tau);
    }
    const Matrix reference = forward_soft(lm.params, context, soft).bottomRows(7);
    identical += mixed == reference ? 1 : 0;
  }
  return {identical == 20, fmt("%d/20 instances bitwise equal to the unconstrained forward pass",
                               identical)};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path base = fs::current_path() / "acceptance_runs";
  fs::path reference = argc > 1 ? fs::path(argv[1]) : base / "a";

  report("gradient-correctness", gradient_correctness);
  report("lm-trainer", lm_trainer);
  report("constraint-ascent", constraint_ascent);
  report("metric-goldens", metric_goldens);
  report("retrieval", retrieval);
  report("perspective-rewriting", perspective_rewriting);
  report("gamma-identity", gamma_identity);

  PipelineRun run;
  bool pipeline_ok = true;
  try {
    if (!fs::exists(reference / "reports" / "report.json")) {
      fs::remove_all(reference);
      run_pipeline(run_config(reference));
    }
    fs::remove_all(base / "b");
    run = run_pipeline(run_config(base / "b"));
  } catch (const std::exception& e) {
    pipeline_ok = false;
    std::printf("pipeline failed: %s\n", e.what());
  }
  auto pipeline = [&](const std::function<Outcome()>& f) {
    return [&, f]() { return pipeline_ok ? f() : Outcome{false, "pipeline did not run"}; };
  };
  report("lambda-d-ordering", pipeline([&] { return lambda_ordering(run); }));
  report("diversity-ordering", pipeline([&] { return diversity_ordering(run); }));
  report("determinism", pipeline([&] { return determinism(reference, base / "b"); }));

  std::printf("%d criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
