#ifndef PABST_SOFT_DECODE_HPP_
#define PABST_SOFT_DECODE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pabst/checkpoint.hpp"
#include "pabst/consistency.hpp"
#include "pabst/jsonl.hpp"
#include "pabst/kv_config.hpp"
#include "pabst/narrative.hpp"
#include "pabst/persona.hpp"
#include "pabst/retrieval.hpp"

namespace pabst {

enum class Realization { kArgmax, kSample };
enum class SoftInput { kExpected, kArgmax };

struct DecodeConfig {
  double lambda_c = 1.0;
  double lambda_d = 1.0;
  double gamma = 0.45;
  double tau = 1.0;
  size_t iterations = 5;
  size_t backward_steps = 3;
  double step_size = 1.0;
  double grad_eps = 1e-8;
  size_t max_length = 100;
  Realization realization = Realization::kArgmax;
  SoftInput soft_input = SoftInput::kExpected;
  uint64_t seed = 0;
  // Attribute chooser.
  double persona_temperature = 0.5;
  size_t history_window = 4;
  bool greedy_attribute = false;

  void validate() const;
  // Sets one field from its key-value form; throws ValidationError for
  // unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  // Applies every entry; with a prefix, only keys starting with it (the
  // prefix is stripped) and the rest are left to the caller.
  void apply(const KeyValues& kv, const std::string& prefix = "");
  void apply_json(const Json& overrides);
  KeyValues to_kv() const;
  Json to_json() const;
  static DecodeConfig from_kv(const KeyValues& kv);
};

// The mutable soft sequence: row i is the state whose logits W o_i / tau
// give the distribution over response token i.
struct Lattice {
  TokenSequence context;
  Matrix states;  // T x d
  size_t length() const { return static_cast<size_t>(states.rows()); }
};

struct LossBreakdown {
  double total = 0.0;
  double entailment = 0.0;  // log q(o, c)
  double story_ce = 0.0;    // summed cross-entropy against the story
  std::vector<double> per_position_ce;
};

// Greedy decode for exactly cfg.max_length steps (end-of-sequence kept as an
// ordinary position).
Lattice init_lattice(const LMParams& params, const TokenSequence& context,
                     const DecodeConfig& cfg);

// lambda_c log q(o, c) - lambda_d sum_{i <= min(T, T_s)} -log softmax(W o_i / tau)[s_i].
LossBreakdown constraint_loss(const LMParams& params, const Matrix& states,
                              const TokenSequence& story, const RowVector& attribute,
                              const ClassifierParams& cls, const DecodeConfig& cfg);

// Analytic gradient of constraint_loss().total with respect to the states.
Matrix constraint_gradient(const LMParams& params, const Matrix& states,
                           const TokenSequence& story, const RowVector& attribute,
                           const ClassifierParams& cls, const DecodeConfig& cfg);

// cfg.backward_steps ascent steps o_i += step * g_i / (|g_i| + eps).
Matrix backward_pass(const LMParams& params, const Matrix& states, const TokenSequence& story,
                     const RowVector& attribute, const ClassifierParams& cls,
                     const DecodeConfig& cfg);

// Autoregressive pass over the context and the response positions, where
// each response position consumes the previous mixed state's expected
// embedding (or argmax token) and o_j = gamma o^f_j + (1 - gamma) o^b_j.
// gamma = 1 returns the unmixed forward states.
Matrix forward_mix_pass(const LMParams& params, const TokenSequence& context,
                        const Matrix& backward_states, const DecodeConfig& cfg);

struct Realized {
  TokenSequence tokens;  // truncated before the first end-of-sequence
  std::string text;
};

Realized realize(const LanguageModel& lm, const Matrix& states, const DecodeConfig& cfg);

struct DecodedResponse {
  std::string text;
  TokenSequence tokens;
  size_t attribute_index = 0;
  std::string attribute;
  std::vector<double> attribute_distribution;
  std::string story_id;
  MatchScore story_score;
  Story story;
  std::vector<LossBreakdown> trace;  // one entry per iteration
  Realization realization = Realization::kArgmax;
  std::vector<std::string> warnings;

  Json to_json() const;
};

// Everything decided before the lattice loop: the attribute, the retrieved and
// rewritten story, and the encoded context.
struct ResponsePlan {
  size_t attribute_index = 0;
  std::string attribute;
  std::vector<double> attribute_distribution;
  std::string story_id;
  MatchScore story_score;
  Story story;
  TokenSequence context;
  std::vector<std::string> warnings;
};

// Samples the attribute with derive_seed(cfg.seed, 1) (or takes the arg-max
// when cfg.greedy_attribute is set), then retrieves and rewrites.
ResponsePlan plan_response(const LanguageModel& lm, const StoryIndex& index,
                           const DialogHistory& history, const Persona& persona,
                           const DecodeConfig& cfg, const NameTable& names = NameTable::bundled());
// As above with a fixed attribute.
ResponsePlan plan_response(const LanguageModel& lm, const StoryIndex& index,
                           const DialogHistory& history, const Persona& persona,
                           size_t attribute_index, const DecodeConfig& cfg,
                           const NameTable& names = NameTable::bundled());

// The lattice loop over a plan.
DecodedResponse decode_plan(const LanguageModel& lm, const ClassifierParams& cls,
                            const ResponsePlan& plan, const DecodeConfig& cfg);

// Attribute choice, retrieval, rewriting and the lattice loop.
DecodedResponse pabst_decode(const LanguageModel& lm, const ClassifierParams& cls,
                             const StoryIndex& index, const DialogHistory& history,
                             const Persona& persona, const DecodeConfig& cfg,
                             const NameTable& names = NameTable::bundled());

// The loop alone, for a fixed context, story and attribute.
struct LatticeRun {
  Matrix initial_states;
  Matrix states;
  std::vector<LossBreakdown> trace;
  Realized realized;
};

LatticeRun run_lattice(const LanguageModel& lm, const ClassifierParams& cls,
                       const TokenSequence& context, const TokenSequence& story,
                       const RowVector& attribute, const DecodeConfig& cfg);

const char* realization_name(Realization r);

}  // namespace pabst

#endif  // PABST_SOFT_DECODE_HPP_
