#include "pabst/soft_decode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pabst/lm_decode.hpp"

namespace pabst {
namespace {

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

void check_story(const TokenSequence& story, const LMParams& params) {
  if (story.empty()) throw ValidationError("story has no tokens");
  for (TokenId id : story) {
    if (id >= params.shape.vocab_size) {
      throw ValidationError("story vocabulary does not match the model");
    }
  }
}

Matrix scaled_logits(const LMParams& params, const Matrix& states, double tau) {
  return (states * params.token_embedding.transpose()) / tau;
}

double log_sum_exp(const RowVector& row) {
  const double m = row.maxCoeff();
  return m + std::log((row.array() - m).exp().sum());
}

}  // namespace

void DecodeConfig::validate() const {
  if (!(lambda_c >= 0.0) || !(lambda_d >= 0.0)) {
    throw ValidationError("lambda_c and lambda_d must be non-negative");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  if (!(step_size > 0.0)) throw ValidationError("step_size must be positive");
  if (!(grad_eps > 0.0)) throw ValidationError("grad_eps must be positive");
  if (!(persona_temperature > 0.0)) throw ValidationError("persona_temperature must be positive");
  if (history_window == 0) throw ValidationError("history_window must be positive");
}

void DecodeConfig::set(const std::string& key, const std::string& value) {
  if (key == "lambda_c") {
    lambda_c = parse_double(key, value);
  } else if (key == "lambda_d") {
    lambda_d = parse_double(key, value);
  } else if (key == "gamma") {
    gamma = parse_double(key, value);
  } else if (key == "tau") {
    tau = parse_double(key, value);
  } else if (key == "iterations") {
    iterations = parse_uint(key, value);
  } else if (key == "backward_steps") {
    backward_steps = parse_uint(key, value);
  } else if (key == "step_size") {
    step_size = parse_double(key, value);
  } else if (key == "grad_eps") {
    grad_eps = parse_double(key, value);
  } else if (key == "max_length") {
    max_length = parse_uint(key, value);
  } else if (key == "realization") {
    if (value == "argmax") {
      realization = Realization::kArgmax;
    } else if (value == "sample") {
      realization = Realization::kSample;
    } else {
      throw ValidationError("realization must be argmax or sample");
    }
  } else if (key == "soft_input") {
    if (value == "expected") {
      soft_input = SoftInput::kExpected;
    } else if (value == "argmax") {
      soft_input = SoftInput::kArgmax;
    } else {
      throw ValidationError("soft_input must be expected or argmax");
    }
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else if (key == "persona_temperature") {
    persona_temperature = parse_double(key, value);
  } else if (key == "history_window") {
    history_window = parse_uint(key, value);
  } else if (key == "greedy_attribute") {
    greedy_attribute = parse_bool(key, value);
  } else {
    throw ValidationError("unknown decode key '" + key + "'");
  }
}

void DecodeConfig::apply(const KeyValues& kv, const std::string& prefix) {
  for (const auto& [key, value] : kv) {
    if (prefix.empty()) {
      set(key, value);
    } else if (key.rfind(prefix, 0) == 0) {
      set(key.substr(prefix.size()), value);
    }
  }
  validate();
}

void DecodeConfig::apply_json(const Json& overrides) {
  if (!overrides.is_object()) throw ValidationError("config overrides must be an object");
  for (const auto& [key, value] : overrides.items()) {
    if (value.is_string()) {
      set(key, value.get<std::string>());
    } else if (value.is_boolean()) {
      set(key, value.get<bool>() ? "true" : "false");
    } else if (value.is_number_unsigned() || value.is_number_integer()) {
      set(key, std::to_string(value.get<long long>()));
    } else if (value.is_number()) {
      set(key, format_double(value.get<double>()));
    } else {
      throw ValidationError("config override '" + key + "' has an unsupported type");
    }
  }
  validate();
}

KeyValues DecodeConfig::to_kv() const {
  return {{"lambda_c", format_double(lambda_c)},
          {"lambda_d", format_double(lambda_d)},
          {"gamma", format_double(gamma)},
          {"tau", format_double(tau)},
          {"iterations", std::to_string(iterations)},
          {"backward_steps", std::to_string(backward_steps)},
          {"step_size", format_double(step_size)},
          {"grad_eps", format_double(grad_eps)},
          {"max_length", std::to_string(max_length)},
          {"realization", realization_name(realization)},
          {"soft_input", soft_input == SoftInput::kExpected ? "expected" : "argmax"},
          {"seed", std::to_string(seed)},
          {"persona_temperature", format_double(persona_temperature)},
          {"history_window", std::to_string(history_window)},
          {"greedy_attribute", greedy_attribute ? "true" : "false"}};
}

Json DecodeConfig::to_json() const {
  return Json{{"lambda_c", lambda_c},
              {"lambda_d", lambda_d},
              {"gamma", gamma},
              {"tau", tau},
              {"iterations", iterations},
              {"backward_steps", backward_steps},
              {"step_size", step_size},
              {"grad_eps", grad_eps},
              {"max_length", max_length},
              {"realization", realization_name(realization)},
              {"soft_input", soft_input == SoftInput::kExpected ? "expected" : "argmax"},
              {"seed", seed},
              {"persona_temperature", persona_temperature},
              {"history_window", history_window},
              {"greedy_attribute", greedy_attribute}};
}

DecodeConfig DecodeConfig::from_kv(const KeyValues& kv) {
  DecodeConfig cfg;
  cfg.apply(kv);
  return cfg;
}

const char* realization_name(Realization r) {
  return r == Realization::kArgmax ? "argmax" : "sample";
}

Lattice init_lattice(const LMParams& params, const TokenSequence& context,
                     const DecodeConfig& cfg) {
  if (context.empty()) throw ValidationError("empty decoding context");
  if (context.size() + cfg.max_length > params.shape.max_positions) {
    throw ValidationError("context plus max_length exceeds the model's position limit");
  }
  GreedyResult g = greedy_decode(params, context, cfg.max_length, false);
  return {context, std::move(g.states)};
}

LossBreakdown constraint_loss(const LMParams& params, const Matrix& states,
                              const TokenSequence& story, const RowVector& attribute,
                              const ClassifierParams& cls, const DecodeConfig& cfg) {
  check_story(story, params);
  LossBreakdown out;
  const size_t n = std::min(static_cast<size_t>(states.rows()), story.size());
  if (n > 0) {
    const Matrix logits = scaled_logits(params, states.topRows(static_cast<Eigen::Index>(n)), cfg.tau);
    for (size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double ce = log_sum_exp(logits.row(r)) - logits(r, story[i]);
      out.per_position_ce.push_back(ce);
      out.story_ce += ce;
    }
  }
  if (states.rows() > 0) out.entailment = log_entail_prob(cls, states, attribute);
  out.total = cfg.lambda_c * out.entailment - cfg.lambda_d * out.story_ce;
  return out;
}

Matrix constraint_gradient(const LMParams& params, const Matrix& states,
                           const TokenSequence& story, const RowVector& attribute,
                           const ClassifierParams& cls, const DecodeConfig& cfg) {
  check_story(story, params);
  Matrix grad = Matrix::Zero(states.rows(), states.cols());
  if (states.rows() == 0) return grad;
  if (cfg.lambda_c != 0.0) grad += cfg.lambda_c * grad_log_entail(cls, states, attribute);
  const size_t n = std::min(static_cast<size_t>(states.rows()), story.size());
  if (cfg.lambda_d != 0.0 && n > 0) {
    const Matrix logits = scaled_logits(params, states.topRows(static_cast<Eigen::Index>(n)), cfg.tau);
    for (size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      RowVector p = softmax(logits.row(r), 1.0);
      p(story[i]) -= 1.0;
      grad.row(r) -= (cfg.lambda_d / cfg.tau) * (p * params.token_embedding);
    }
  }
  return grad;
}

Matrix backward_pass(const LMParams& params, const Matrix& states, const TokenSequence& story,
                     const RowVector& attribute, const ClassifierParams& cls,
                     const DecodeConfig& cfg) {
  Matrix o = states;
  for (size_t step = 0; step < cfg.backward_steps; ++step) {
    const Matrix g = constraint_gradient(params, o, story, attribute, cls, cfg);
    if (!g.allFinite()) {
      throw NumericError("non-finite gradient in backward step " + std::to_string(step));
    }
    for (Eigen::Index i = 0; i < o.rows(); ++i) {
      o.row(i) += (cfg.step_size / (g.row(i).norm() + cfg.grad_eps)) * g.row(i);
    }
  }
  check_finite(o, "backward states");
  return o;
}

Matrix forward_mix_pass(const LMParams& params, const TokenSequence& context,
                        const Matrix& backward_states, const DecodeConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
  if (context.empty()) throw ValidationError("empty decoding context");
  const Eigen::Index T = backward_states.rows();
  Matrix mixed(T, params.shape.d_model);
  if (T == 0) return mixed;
  if (context.size() + static_cast<size_t>(T) - 1 > params.shape.max_positions) {
    throw ValidationError("lattice exceeds the model's position limit");
  }
  DecoderCache cache(params);
  RowVector forward_state;
  for (TokenId id : context) forward_state = cache.step_token(id);
  for (Eigen::Index j = 0; j < T; ++j) {
    if (cfg.gamma == 1.0) {
      mixed.row(j) = forward_state;
    } else {
      mixed.row(j) = cfg.gamma * forward_state + (1.0 - cfg.gamma) * backward_states.row(j);
    }
    if (j + 1 == T) break;
    const RowVector logits = project_logits(params, mixed.row(j));
    if (cfg.soft_input == SoftInput::kExpected) {
      forward_state = cache.step(expected_embedding(params, softmax(logits, cfg.tau)));
    } else {
      forward_state = cache.step_token(argmax(logits));
    }
  }
  check_finite(mixed, "mixed states");
  return mixed;
}

Realized realize(const LanguageModel& lm, const Matrix& states, const DecodeConfig& cfg) {
  Realized out;
  Rng rng(derive_seed(cfg.seed, 2));
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    const RowVector logits = project_logits(lm.params, states.row(i));
    const TokenId id = cfg.realization == Realization::kArgmax
                           ? argmax(logits)
                           : sample_categorical(softmax(logits, cfg.tau), rng);
    if (id == kEos) break;
    out.tokens.push_back(id);
  }
  out.text = lm.vocab.decode(out.tokens);
  return out;
}

LatticeRun run_lattice(const LanguageModel& lm, const ClassifierParams& cls,
                       const TokenSequence& context, const TokenSequence& story,
                       const RowVector& attribute, const DecodeConfig& cfg) {
  cfg.validate();
  check_story(story, lm.params);
  LatticeRun run;
  run.initial_states = init_lattice(lm.params, context, cfg).states;
  run.states = run.initial_states;
  for (size_t it = 0; it < cfg.iterations; ++it) {
    const Matrix b = backward_pass(lm.params, run.states, story, attribute, cls, cfg);
    run.states = forward_mix_pass(lm.params, context, b, cfg);
    run.trace.push_back(constraint_loss(lm.params, run.states, story, attribute, cls, cfg));
  }
  run.realized = realize(lm, run.states, cfg);
  return run;
}

namespace {

void check_plan_inputs(const LanguageModel& lm, const DialogHistory& history,
                       const Persona& persona, const DecodeConfig& cfg) {
  cfg.validate();
  validate_history(history, true);
  if (persona.attributes.empty()) throw ValidationError("persona has no attributes");
  if (cfg.max_length >= lm.params.shape.max_positions) {
    throw ValidationError("max_length leaves no room for the context");
  }
}

}  // namespace

ResponsePlan plan_response(const LanguageModel& lm, const StoryIndex& index,
                           const DialogHistory& history, const Persona& persona,
                           const DecodeConfig& cfg, const NameTable& names) {
  check_plan_inputs(lm, history, persona, cfg);
  const std::vector<double> dist = attribute_distribution(lm, history, persona,
                                                          cfg.persona_temperature,
                                                          cfg.history_window);
  const size_t chosen = sample_attribute(dist, derive_seed(cfg.seed, 1), cfg.greedy_attribute);
  ResponsePlan plan = plan_response(lm, index, history, persona, chosen, cfg, names);
  plan.attribute_distribution = dist;
  return plan;
}

ResponsePlan plan_response(const LanguageModel& lm, const StoryIndex& index,
                           const DialogHistory& history, const Persona& persona,
                           size_t attribute_index, const DecodeConfig& cfg,
                           const NameTable& names) {
  check_plan_inputs(lm, history, persona, cfg);
  if (attribute_index >= persona.attributes.size()) {
    throw ValidationError("attribute index out of range");
  }
  ResponsePlan plan;
  plan.attribute_index = attribute_index;
  plan.attribute = persona.attributes[attribute_index];
  const RetrievalResult hit = retrieve(index, lm, plan.attribute);
  plan.story_id = hit.story->id;
  plan.story_score = hit.score;
  plan.story = personify_story(hit.story->id, hit.story->text, names);
  encode_story(plan.story, lm.vocab);
  plan.warnings = plan.story.warnings;
  plan.context = encode_context(lm.vocab, history, plan.attribute,
                                lm.params.shape.max_positions - cfg.max_length);
  return plan;
}

DecodedResponse decode_plan(const LanguageModel& lm, const ClassifierParams& cls,
                            const ResponsePlan& plan, const DecodeConfig& cfg) {
  cfg.validate();
  DecodedResponse out;
  out.attribute_index = plan.attribute_index;
  out.attribute = plan.attribute;
  out.attribute_distribution = plan.attribute_distribution;
  out.story_id = plan.story_id;
  out.story_score = plan.story_score;
  out.story = plan.story;
  out.warnings = plan.warnings;
  const RowVector attr = attribute_embedding(lm, plan.attribute);
  LatticeRun run = run_lattice(lm, cls, plan.context, plan.story.token_ids, attr, cfg);
  out.tokens = std::move(run.realized.tokens);
  out.text = std::move(run.realized.text);
  out.trace = std::move(run.trace);
  out.realization = cfg.realization;
  return out;
}

DecodedResponse pabst_decode(const LanguageModel& lm, const ClassifierParams& cls,
                             const StoryIndex& index, const DialogHistory& history,
                             const Persona& persona, const DecodeConfig& cfg,
                             const NameTable& names) {
  return decode_plan(lm, cls, plan_response(lm, index, history, persona, cfg, names), cfg);
}

Json DecodedResponse::to_json() const {
  Json iterations = Json::array();
  for (const LossBreakdown& l : trace) {
    iterations.push_back(Json{{"total", l.total},
                              {"entailment", l.entailment},
                              {"story_ce", l.story_ce}});
  }
  return Json{{"reply", text},
              {"attribute", attribute},
              {"attribute_index", attribute_index},
              {"story_id", story_id},
              {"story_text", story.rewritten_text},
              {"story_f1", story_score.f1},
              {"iterations", trace.size()},
              {"final_loss", trace.empty() ? 0.0 : trace.back().total},
              {"losses", iterations},
              {"mode", realization_name(realization)},
              {"warnings", warnings}};
}

}  // namespace pabst
