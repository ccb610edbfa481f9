#ifndef PABST_EXPERIMENT_HPP_
#define PABST_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pabst/checkpoint.hpp"
#include "pabst/consistency.hpp"
#include "pabst/kv_config.hpp"
#include "pabst/lm_train.hpp"
#include "pabst/metrics.hpp"
#include "pabst/persona.hpp"
#include "pabst/retrieval.hpp"
#include "pabst/soft_decode.hpp"
#include "pabst/toy_data.hpp"

namespace pabst {

enum class Regime { kDialog, kPseudo, kMultitask };

const char* regime_name(Regime r);
Regime parse_regime(const std::string& name);  // "dialog" | "pseudo" | "multitask"

// Systems compared by run_eval, in report order.
const std::vector<std::string>& all_systems();

struct ExperimentConfig {
  std::string data_dir = "data";
  std::string work_dir = "work";
  std::string report_dir = "reports";
  uint64_t seed = 0;

  ToySizes sizes;
  ModelShape shape;  // vocab_size comes from the built vocabulary
  size_t vocab_max_size = 2000;

  TrainConfig lm;
  TrainConfig classifier;
  double classifier_heldout_fraction = 0.1;

  double pseudo_ratio = 0.3;
  double multitask_ratio = 0.5;
  double nucleus_p = 0.9;

  std::vector<std::string> systems = all_systems();
  std::vector<double> sweep_lambda_d = {0.05, 1.0, 5.0};
  size_t eval_prompts = 100;
  size_t eval_workers = 1;

  DecodeConfig decode;

  ExperimentConfig();
  void validate() const;
  // Flat keys: data_dir, work_dir, report_dir, seed, data.*, model.*,
  // vocab.max_size, lm.*, cls.*, pseudo.ratio, multitask.ratio, nucleus.p,
  // systems, sweep.lambda_d, eval.prompts, eval.workers, decode.*.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  KeyValues to_kv() const;
  static ExperimentConfig load(const std::string& path);

  std::string data_path(const std::string& name) const;  // data_dir/name.jsonl
  std::string lm_path(Regime r) const;                   // work_dir/lm-<regime>.ckpt
  std::string classifier_path() const;
  std::string index_path() const;
};

// Vocabulary over every dialog, persona, story (raw and rewritten) and
// entailment text of the training corpora.
Vocabulary build_shared_vocab(const ToyCorpora& corpora, size_t max_size);

// The persona attribute sharing the most content words with the response
// (first on ties).
size_t best_attribute(const std::vector<std::string>& persona, const std::string& response);

// context = encode_context(history, best attribute), target = response + EOS.
std::vector<TrainExample> dialog_training_examples(const Vocabulary& vocab,
                                                   const std::vector<DialogExample>& dialogs,
                                                   size_t max_positions);
// As above, conditioning example k on persona attribute attributes[k].
std::vector<TrainExample> dialog_training_examples(const Vocabulary& vocab,
                                                   const std::vector<DialogExample>& dialogs,
                                                   const std::vector<size_t>& attributes,
                                                   size_t max_positions);
// context = [BOS], target = story + EOS.
std::vector<TrainExample> story_training_examples(const Vocabulary& vocab,
                                                  const std::vector<StoryRecord>& stories,
                                                  size_t max_positions);

struct PseudoLabelResult {
  std::vector<DialogExample> corpus;
  std::vector<size_t> replaced;    // ascending
  std::vector<size_t> attributes;  // per example: sampled if replaced, else best_attribute
};

// Replaces floor(ratio * N) seeded-uniform targets with the rewritten top
// story for an attribute sampled from each example's history.
PseudoLabelResult pseudo_label_corpus(const std::vector<DialogExample>& dialogs,
                                      const StoryIndex& index, const LanguageModel& lm,
                                      double ratio, uint64_t seed,
                                      double persona_temperature = 0.5,
                                      const NameTable& names = NameTable::bundled());

struct TaggedExample {
  TrainExample example;
  bool from_story = false;
};
using TaggedSource = std::function<TaggedExample()>;

// Each draw is a story example with probability ratio, otherwise a dialog
// example; each side cycles through its own seeded shuffle. Both corpora must
// outlive the stream.
TaggedSource multitask_stream(const std::vector<TrainExample>& dialog,
                              const std::vector<TrainExample>& story, double ratio,
                              uint64_t seed);

// Pipeline stages. Each reads its inputs from the configured paths, throws
// ValidationError naming any missing artifact, and overwrites its outputs.
ToyCorpora run_gen_data(const ExperimentConfig& cfg);
TrainResult run_train_lm(const ExperimentConfig& cfg, Regime regime,
                         const TrainObserver& observer = {});
ClassifierTrainResult run_train_classifier(const ExperimentConfig& cfg);
StoryIndex run_index(const ExperimentConfig& cfg);

struct SystemResult {
  std::string name;
  std::vector<std::string> responses;
  SystemMetrics metrics;
};

struct EvalReport {
  std::vector<SystemResult> systems;
  std::vector<std::string> story_ids;  // per prompt
  std::vector<std::string> attributes;
  // {system name -> {d1, d2, entr, mean_overlap_f1, n}}
  Json to_json() const;
};

// Decodes the shared prompts with every selected system and writes
// report.json, report.txt, transcripts.jsonl and responses/<system>.txt under
// report_dir.
EvalReport run_eval(const ExperimentConfig& cfg);

struct SweepRow {
  double lambda_d = 0.0;
  SystemMetrics metrics;
  std::vector<std::string> responses;
};

// PABST over the prompts for each lambda_d; writes sweep.json, sweep.txt and
// responses/sweep-<lambda_d>.txt.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

// gen-data, every training regime, classifier, index, eval and sweep.
void run_all(const ExperimentConfig& cfg, const TrainObserver& observer = {});

}  // namespace pabst

#endif  // PABST_EXPERIMENT_HPP_
