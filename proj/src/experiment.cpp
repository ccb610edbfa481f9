#include "pabst/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pabst/lm_decode.hpp"
#include "pabst/text.hpp"

namespace pabst {
namespace {

namespace fs = std::filesystem;

enum SeedStream : uint64_t {
  kInitStream = 20,
  kOrderStream = 30,
  kClassifierStream = 40,
  kPseudoStream = 50,
  kMultitaskStream = 60,
  kAttributeStream = 70,
  kNucleusStream = 71,
  kRealizeStream = 72,
};

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    const size_t b = item.find_first_not_of(" \t");
    const size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ValidationError("empty list item in '" + value + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += format(items[i]);
  }
  return out;
}

void set_train(TrainConfig& t, const std::string& key, const std::string& value,
               const std::string& full_key) {
  if (key == "steps") {
    t.steps = parse_uint(full_key, value);
  } else if (key == "batch_size") {
    t.batch_size = parse_uint(full_key, value);
  } else if (key == "learning_rate") {
    t.learning_rate = parse_double(full_key, value);
  } else if (key == "warmup_steps") {
    t.warmup_steps = parse_uint(full_key, value);
  } else if (key == "clip_norm") {
    t.clip_norm = parse_double(full_key, value);
  } else if (key == "weight_decay") {
    t.weight_decay = parse_double(full_key, value);
  } else {
    throw ValidationError("unknown config key: " + full_key);
  }
}

void train_to_kv(const TrainConfig& t, const std::string& prefix, KeyValues& kv) {
  kv[prefix + "steps"] = std::to_string(t.steps);
  kv[prefix + "batch_size"] = std::to_string(t.batch_size);
  kv[prefix + "learning_rate"] = format_double(t.learning_rate);
  kv[prefix + "warmup_steps"] = std::to_string(t.warmup_steps);
  kv[prefix + "clip_norm"] = format_double(t.clip_norm);
  kv[prefix + "weight_decay"] = format_double(t.weight_decay);
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw ValidationError("missing artifact: " + path);
}

std::string strip_eos_text(const Vocabulary& vocab, TokenSequence tokens) {
  const auto eos = std::find(tokens.begin(), tokens.end(), kEos);
  tokens.erase(eos, tokens.end());
  return vocab.decode(tokens);
}

// Runs fn(k) for k in [0, n) over up to `workers` threads; results must be
// written to per-k slots. Rethrows the first failure.
void parallel_for(size_t n, size_t workers, const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (size_t k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ToyCorpora load_corpora(const ExperimentConfig& cfg) {
  for (const char* name : {"personas", "dialogs", "stories", "entail", "prompts"}) {
    require_file(cfg.data_path(name));
  }
  return read_toy_corpora(cfg.data_dir);
}

LanguageModel load_lm(const ExperimentConfig& cfg, Regime r) {
  require_file(cfg.lm_path(r));
  return load_checkpoint(cfg.lm_path(r));
}

// Per-prompt inputs shared by every system.
struct PromptPlan {
  Persona persona;
  DialogHistory history;
  ResponsePlan plan;
};

struct EvalArtifacts {
  ToyCorpora corpora;
  LanguageModel base;
  ClassifierParams cls;
  StoryIndex index{0, {}};
  std::vector<PromptPlan> prompts;
};

DecodeConfig prompt_decode_config(const ExperimentConfig& cfg, size_t k) {
  DecodeConfig d = cfg.decode;
  d.seed = derive_seed(derive_seed(cfg.seed, kRealizeStream), k);
  return d;
}

EvalArtifacts load_eval_artifacts(const ExperimentConfig& cfg) {
  EvalArtifacts a;
  a.corpora = load_corpora(cfg);
  a.base = load_lm(cfg, Regime::kDialog);
  require_file(cfg.classifier_path());
  a.cls = ClassifierParams::load(cfg.classifier_path());
  require_file(cfg.index_path());
  a.index = StoryIndex::load(cfg.index_path());
  if (a.cls.dim() != a.base.params.shape.d_model) {
    throw ValidationError("classifier dimension does not match the dialog model");
  }

  const size_t n = std::min(cfg.eval_prompts, a.corpora.prompts.size());
  a.prompts.resize(n);
  parallel_for(n, cfg.eval_workers, [&](size_t k) {
    const DialogExample& ex = a.corpora.prompts[k];
    PromptPlan& p = a.prompts[k];
    p.persona = {"prompt-" + std::to_string(k), ex.persona};
    p.history = ex.history;
    const DecodeConfig d = prompt_decode_config(cfg, k);
    const std::vector<double> dist = attribute_distribution(
        a.base, p.history, p.persona, d.persona_temperature, d.history_window);
    const size_t chosen = sample_attribute(
        dist, derive_seed(derive_seed(cfg.seed, kAttributeStream), k), d.greedy_attribute);
    p.plan = plan_response(a.base, a.index, p.history, p.persona, chosen, d);
    p.plan.attribute_distribution = dist;
  });
  return a;
}

std::vector<std::string> story_texts(const EvalArtifacts& a) {
  std::vector<std::string> out;
  for (const PromptPlan& p : a.prompts) out.push_back(p.plan.story.rewritten_text);
  return out;
}

std::vector<std::string> normalized(const std::vector<std::string>& texts) {
  std::vector<std::string> out;
  for (const std::string& t : texts) out.push_back(normalized_text(t));
  return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string body;
  for (const std::string& l : lines) body += l + "\n";
  write_file(path, body);
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::kDialog: return "dialog";
    case Regime::kPseudo: return "pseudo";
    case Regime::kMultitask: return "multitask";
  }
  return "dialog";
}

Regime parse_regime(const std::string& name) {
  if (name == "dialog") return Regime::kDialog;
  if (name == "pseudo") return Regime::kPseudo;
  if (name == "multitask") return Regime::kMultitask;
  throw ValidationError("unknown regime: " + name);
}

const std::vector<std::string>& all_systems() {
  static const std::vector<std::string> s = {"base",      "nucleus", "retrieval",      "pseudo",
                                             "multitask", "pabst",   "pabst_no_entail"};
  return s;
}

ExperimentConfig::ExperimentConfig() {
  classifier.steps = 300;
  classifier.learning_rate = 0.02;
  classifier.warmup_steps = 20;
  classifier.weight_decay = 1e-3;
}

void ExperimentConfig::validate() const {
  if (data_dir.empty() || work_dir.empty() || report_dir.empty()) {
    throw ValidationError("directories must be nonempty");
  }
  if (sizes.dialogs == 0 || sizes.stories == 0 || sizes.personas == 0 ||
      sizes.entail_pairs == 0 || sizes.prompts == 0) {
    throw ValidationError("corpus sizes must be positive");
  }
  if (vocab_max_size <= kNumReserved) throw ValidationError("vocab.max_size too small");
  lm.validate();
  classifier.validate();
  if (!(classifier_heldout_fraction >= 0.0 && classifier_heldout_fraction < 1.0)) {
    throw ValidationError("cls.heldout_fraction must be in [0, 1)");
  }
  if (!(pseudo_ratio >= 0.0 && pseudo_ratio <= 1.0)) {
    throw ValidationError("pseudo.ratio must be in [0, 1]");
  }
  if (!(multitask_ratio > 0.0 && multitask_ratio < 1.0)) {
    throw ValidationError("multitask.ratio must be in (0, 1)");
  }
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) throw ValidationError("nucleus.p must be in (0, 1]");
  if (systems.empty()) throw ValidationError("systems list is empty");
  for (const std::string& s : systems) {
    if (std::find(all_systems().begin(), all_systems().end(), s) == all_systems().end()) {
      throw ValidationError("unknown system: " + s);
    }
  }
  if (sweep_lambda_d.empty()) throw ValidationError("sweep.lambda_d is empty");
  for (double l : sweep_lambda_d) {
    if (!(l >= 0.0)) throw ValidationError("sweep.lambda_d values must be nonnegative");
  }
  if (eval_prompts == 0) throw ValidationError("eval.prompts must be positive");
  if (eval_workers == 0) throw ValidationError("eval.workers must be positive");
  decode.validate();
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto starts = [&](const char* p) { return key.rfind(p, 0) == 0; };
  if (key == "data_dir") {
    data_dir = value;
  } else if (key == "work_dir") {
    work_dir = value;
  } else if (key == "report_dir") {
    report_dir = value;
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else if (key == "data.dialogs") {
    sizes.dialogs = parse_uint(key, value);
  } else if (key == "data.stories") {
    sizes.stories = parse_uint(key, value);
  } else if (key == "data.personas") {
    sizes.personas = parse_uint(key, value);
  } else if (key == "data.entail_pairs") {
    sizes.entail_pairs = parse_uint(key, value);
  } else if (key == "data.prompts") {
    sizes.prompts = parse_uint(key, value);
  } else if (key == "model.d_model") {
    shape.d_model = static_cast<uint32_t>(parse_uint(key, value));
  } else if (key == "model.n_layers") {
    shape.n_layers = static_cast<uint32_t>(parse_uint(key, value));
  } else if (key == "model.n_heads") {
    shape.n_heads = static_cast<uint32_t>(parse_uint(key, value));
  } else if (key == "model.max_positions") {
    shape.max_positions = static_cast<uint32_t>(parse_uint(key, value));
  } else if (key == "vocab.max_size") {
    vocab_max_size = parse_uint(key, value);
  } else if (key == "cls.heldout_fraction") {
    classifier_heldout_fraction = parse_double(key, value);
  } else if (starts("lm.")) {
    set_train(lm, key.substr(3), value, key);
  } else if (starts("cls.")) {
    set_train(classifier, key.substr(4), value, key);
  } else if (key == "pseudo.ratio") {
    pseudo_ratio = parse_double(key, value);
  } else if (key == "multitask.ratio") {
    multitask_ratio = parse_double(key, value);
  } else if (key == "nucleus.p") {
    nucleus_p = parse_double(key, value);
  } else if (key == "systems") {
    systems = split_list(value);
  } else if (key == "sweep.lambda_d") {
    sweep_lambda_d.clear();
    for (const std::string& v : split_list(value)) sweep_lambda_d.push_back(parse_double(key, v));
  } else if (key == "eval.prompts") {
    eval_prompts = parse_uint(key, value);
  } else if (key == "eval.workers") {
    eval_workers = parse_uint(key, value);
  } else if (starts("decode.")) {
    decode.set(key.substr(7), value);
  } else {
    throw ValidationError("unknown config key: " + key);
  }
}

void ExperimentConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) set(key, value);
  validate();
}

KeyValues ExperimentConfig::to_kv() const {
  KeyValues kv = {
      {"data_dir", data_dir},
      {"work_dir", work_dir},
      {"report_dir", report_dir},
      {"seed", std::to_string(seed)},
      {"data.dialogs", std::to_string(sizes.dialogs)},
      {"data.stories", std::to_string(sizes.stories)},
      {"data.personas", std::to_string(sizes.personas)},
      {"data.entail_pairs", std::to_string(sizes.entail_pairs)},
      {"data.prompts", std::to_string(sizes.prompts)},
      {"model.d_model", std::to_string(shape.d_model)},
      {"model.n_layers", std::to_string(shape.n_layers)},
      {"model.n_heads", std::to_string(shape.n_heads)},
      {"model.max_positions", std::to_string(shape.max_positions)},
      {"vocab.max_size", std::to_string(vocab_max_size)},
      {"cls.heldout_fraction", format_double(classifier_heldout_fraction)},
      {"pseudo.ratio", format_double(pseudo_ratio)},
      {"multitask.ratio", format_double(multitask_ratio)},
      {"nucleus.p", format_double(nucleus_p)},
      {"systems", join(systems, [](const std::string& s) { return s; })},
      {"sweep.lambda_d", join(sweep_lambda_d, format_double)},
      {"eval.prompts", std::to_string(eval_prompts)},
      {"eval.workers", std::to_string(eval_workers)},
  };
  train_to_kv(lm, "lm.", kv);
  train_to_kv(classifier, "cls.", kv);
  for (const auto& [k, v] : decode.to_kv()) kv["decode." + k] = v;
  return kv;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  ExperimentConfig cfg;
  cfg.apply(read_kv_file(path));
  return cfg;
}

std::string ExperimentConfig::data_path(const std::string& name) const {
  return data_dir + "/" + name + ".jsonl";
}

std::string ExperimentConfig::lm_path(Regime r) const {
  return work_dir + "/lm-" + regime_name(r) + ".ckpt";
}

std::string ExperimentConfig::classifier_path() const { return work_dir + "/classifier.txt"; }

std::string ExperimentConfig::index_path() const { return work_dir + "/stories.idx"; }

Vocabulary build_shared_vocab(const ToyCorpora& corpora, size_t max_size) {
  std::vector<std::string> texts;
  for (const Persona& p : corpora.personas) {
    texts.insert(texts.end(), p.attributes.begin(), p.attributes.end());
  }
  for (const DialogExample& d : corpora.dialogs) {
    for (const DialogTurn& t : d.history) texts.push_back(t.text);
    texts.insert(texts.end(), d.persona.begin(), d.persona.end());
    texts.push_back(d.response);
  }
  for (const StoryRecord& s : corpora.stories) {
    texts.push_back(s.text);
    texts.push_back(personify_story(s.id, s.text).rewritten_text);
  }
  for (const EntailmentPair& e : corpora.entail) {
    texts.push_back(e.attribute);
    texts.push_back(e.response);
  }
  return build_vocab(texts, max_size);
}

size_t best_attribute(const std::vector<std::string>& persona, const std::string& response) {
  if (persona.empty()) throw ValidationError("persona has no attributes");
  const auto rw = content_words(response);
  const std::set<std::string> response_words(rw.begin(), rw.end());
  size_t best = 0, best_count = 0;
  for (size_t i = 0; i < persona.size(); ++i) {
    const auto aw = content_words(persona[i]);
    const std::set<std::string> attr_words(aw.begin(), aw.end());
    size_t count = 0;
    for (const std::string& w : attr_words) count += response_words.count(w);
    if (count > best_count) {
      best = i;
      best_count = count;
    }
  }
  return best;
}

std::vector<TrainExample> dialog_training_examples(const Vocabulary& vocab,
                                                   const std::vector<DialogExample>& dialogs,
                                                   size_t max_positions) {
  std::vector<size_t> attributes;
  for (const DialogExample& d : dialogs) attributes.push_back(best_attribute(d.persona, d.response));
  return dialog_training_examples(vocab, dialogs, attributes, max_positions);
}

std::vector<TrainExample> dialog_training_examples(const Vocabulary& vocab,
                                                   const std::vector<DialogExample>& dialogs,
                                                   const std::vector<size_t>& attributes,
                                                   size_t max_positions) {
  if (attributes.size() != dialogs.size()) {
    throw ValidationError("one attribute per dialog is required");
  }
  std::vector<TrainExample> out;
  for (size_t k = 0; k < dialogs.size(); ++k) {
    const DialogExample& d = dialogs[k];
    if (attributes[k] >= d.persona.size()) throw ValidationError("attribute index out of range");
    TrainExample ex;
    ex.target = vocab.encode(d.response);
    ex.target.push_back(kEos);
    if (ex.target.size() >= max_positions) {
      throw ValidationError("dialog response longer than the model window");
    }
    ex.context = encode_context(vocab, d.history, d.persona[attributes[k]],
                                max_positions - ex.target.size());
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TrainExample> story_training_examples(const Vocabulary& vocab,
                                                  const std::vector<StoryRecord>& stories,
                                                  size_t max_positions) {
  std::vector<TrainExample> out;
  for (const StoryRecord& s : stories) {
    TrainExample ex;
    ex.context = {kBos};
    ex.target = vocab.encode(s.text);
    ex.target.push_back(kEos);
    if (ex.target.size() + 1 > max_positions) {
      throw ValidationError("story " + s.id + " longer than the model window");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

PseudoLabelResult pseudo_label_corpus(const std::vector<DialogExample>& dialogs,
                                      const StoryIndex& index, const LanguageModel& lm,
                                      double ratio, uint64_t seed, double persona_temperature,
                                      const NameTable& names) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ValidationError("pseudo ratio must be in [0, 1]");
  if (index.size() == 0) throw ValidationError("empty story index");
  PseudoLabelResult out;
  out.corpus = dialogs;
  for (const DialogExample& d : dialogs) {
    out.attributes.push_back(best_attribute(d.persona, d.response));
  }
  const size_t n = dialogs.size();
  const size_t count = static_cast<size_t>(std::floor(ratio * static_cast<double>(n)));

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (size_t i = 0; i < count; ++i) std::swap(order[i], order[i + uniform_index(rng, n - i)]);
  out.replaced.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(out.replaced.begin(), out.replaced.end());

  for (size_t k : out.replaced) {
    DialogExample& d = out.corpus[k];
    const Persona persona{"", d.persona};
    const std::vector<double> dist =
        attribute_distribution(lm, d.history, persona, persona_temperature);
    const size_t chosen = sample_attribute(dist, derive_seed(seed, k));
    const RetrievalResult hit = retrieve(index, lm, d.persona[chosen]);
    d.response = personify_story(hit.story->id, hit.story->text, names).rewritten_text;
    out.attributes[k] = chosen;
  }
  return out;
}

TaggedSource multitask_stream(const std::vector<TrainExample>& dialog,
                              const std::vector<TrainExample>& story, double ratio,
                              uint64_t seed) {
  if (dialog.empty() || story.empty()) throw ValidationError("multitask corpora must be nonempty");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("multitask ratio must be in (0, 1)");
  auto coin = std::make_shared<Rng>(derive_seed(seed, 0));
  ExampleSource dialogs = shuffled_source(dialog, derive_seed(seed, 1));
  ExampleSource stories = shuffled_source(story, derive_seed(seed, 2));
  return [coin, dialogs, stories, ratio]() {
    if (uniform01(*coin) < ratio) return TaggedExample{stories(), true};
    return TaggedExample{dialogs(), false};
  };
}

ToyCorpora run_gen_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ToyCorpora c = generate_toy_corpora(cfg.seed, cfg.sizes);
  write_toy_corpora(c, cfg.data_dir);
  return c;
}

TrainResult run_train_lm(const ExperimentConfig& cfg, Regime regime,
                         const TrainObserver& observer) {
  cfg.validate();
  const ToyCorpora corpora = load_corpora(cfg);
  const Vocabulary vocab = build_shared_vocab(corpora, cfg.vocab_max_size);
  ModelShape shape = cfg.shape;
  shape.vocab_size = static_cast<uint32_t>(vocab.size());
  const uint64_t r = static_cast<uint64_t>(regime);
  const LMParams init = LMParams::random(shape, derive_seed(cfg.seed, kInitStream + r));
  TrainConfig tc = cfg.lm;
  tc.seed = derive_seed(cfg.seed, kOrderStream + r);

  TrainResult result;
  switch (regime) {
    case Regime::kDialog: {
      const auto examples = dialog_training_examples(vocab, corpora.dialogs, shape.max_positions);
      result = train_lm(examples, init, tc, observer);
      break;
    }
    case Regime::kPseudo: {
      const LanguageModel base = load_lm(cfg, Regime::kDialog);
      require_file(cfg.index_path());
      const StoryIndex index = StoryIndex::load(cfg.index_path());
      const PseudoLabelResult pseudo =
          pseudo_label_corpus(corpora.dialogs, index, base, cfg.pseudo_ratio,
                              derive_seed(cfg.seed, kPseudoStream),
                              cfg.decode.persona_temperature);
      std::vector<Json> rows;
      for (const DialogExample& d : pseudo.corpus) rows.push_back(dialog_to_json(d));
      fs::create_directories(cfg.work_dir);
      write_jsonl(cfg.work_dir + "/pseudo-dialogs.jsonl", rows);
      const auto examples =
          dialog_training_examples(vocab, pseudo.corpus, pseudo.attributes, shape.max_positions);
      result = train_lm(examples, init, tc, observer);
      break;
    }
    case Regime::kMultitask: {
      const auto dialog = dialog_training_examples(vocab, corpora.dialogs, shape.max_positions);
      const auto story = story_training_examples(vocab, corpora.stories, shape.max_positions);
      const TaggedSource mixed = multitask_stream(dialog, story, cfg.multitask_ratio,
                                                  derive_seed(cfg.seed, kMultitaskStream));
      result = train_lm_stream([&mixed] { return mixed().example; }, init, tc, observer);
      break;
    }
  }
  fs::create_directories(cfg.work_dir);
  save_checkpoint(cfg.lm_path(regime), LanguageModel{vocab, result.params});
  return result;
}

ClassifierTrainResult run_train_classifier(const ExperimentConfig& cfg) {
  cfg.validate();
  require_file(cfg.data_path("entail"));
  const LanguageModel base = load_lm(cfg, Regime::kDialog);
  std::vector<EntailmentPair> pairs = read_entailment_pairs(cfg.data_path("entail"));
  Rng rng(derive_seed(cfg.seed, kClassifierStream));
  for (size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[uniform_index(rng, i)]);
  const size_t heldout = static_cast<size_t>(
      std::floor(cfg.classifier_heldout_fraction * static_cast<double>(pairs.size())));
  const std::vector<EntailmentPair> test(pairs.begin(),
                                         pairs.begin() + static_cast<std::ptrdiff_t>(heldout));
  const std::vector<EntailmentPair> train(pairs.begin() + static_cast<std::ptrdiff_t>(heldout),
                                          pairs.end());
  TrainConfig tc = cfg.classifier;
  tc.seed = derive_seed(cfg.seed, kClassifierStream + 1);
  ClassifierTrainResult r = train_classifier(train, test, base, tc);
  fs::create_directories(cfg.work_dir);
  r.params.save(cfg.classifier_path());
  return r;
}

StoryIndex run_index(const ExperimentConfig& cfg) {
  cfg.validate();
  require_file(cfg.data_path("stories"));
  const LanguageModel base = load_lm(cfg, Regime::kDialog);
  StoryIndex index = index_stories(base, cfg.data_path("stories"));
  fs::create_directories(cfg.work_dir);
  index.save(cfg.index_path());
  return index;
}

Json EvalReport::to_json() const {
  Json out = Json::object();
  for (const SystemResult& s : systems) out[s.name] = metrics_to_json(s.metrics);
  return out;
}

EvalReport run_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  const EvalArtifacts a = load_eval_artifacts(cfg);
  const size_t n = a.prompts.size();
  const size_t max_len = cfg.decode.max_length;

  auto needs = [&](const char* s) {
    return std::find(cfg.systems.begin(), cfg.systems.end(), s) != cfg.systems.end();
  };
  LanguageModel pseudo_lm, multitask_lm;
  if (needs("pseudo")) pseudo_lm = load_lm(cfg, Regime::kPseudo);
  if (needs("multitask")) multitask_lm = load_lm(cfg, Regime::kMultitask);
  for (const char* s : {"pseudo", "multitask"}) {
    const LanguageModel& m = std::string(s) == "pseudo" ? pseudo_lm : multitask_lm;
    if (needs(s) && !(m.vocab == a.base.vocab)) {
      throw ValidationError("baseline model vocabulary differs from the dialog model");
    }
  }

  EvalReport report;
  for (const PromptPlan& p : a.prompts) {
    report.story_ids.push_back(p.plan.story_id);
    report.attributes.push_back(p.plan.attribute);
  }
  const std::vector<std::string> stories = story_texts(a);

  for (const std::string& name : cfg.systems) {
    SystemResult sys;
    sys.name = name;
    sys.responses.resize(n);
    parallel_for(n, cfg.eval_workers, [&](size_t k) {
      const PromptPlan& p = a.prompts[k];
      const uint64_t nucleus_seed = derive_seed(derive_seed(cfg.seed, kNucleusStream), k);
      const DecodeConfig d = prompt_decode_config(cfg, k);
      std::string& out = sys.responses[k];
      if (name == "base") {
        out = strip_eos_text(a.base.vocab, greedy_decode(a.base.params, p.plan.context, max_len).tokens);
      } else if (name == "nucleus") {
        out = strip_eos_text(a.base.vocab, nucleus_decode(a.base.params, p.plan.context,
                                                          cfg.nucleus_p, max_len, nucleus_seed));
      } else if (name == "retrieval") {
        out = p.plan.story.rewritten_text;
      } else if (name == "pseudo" || name == "multitask") {
        const LanguageModel& m = name == "pseudo" ? pseudo_lm : multitask_lm;
        out = strip_eos_text(m.vocab,
                             nucleus_decode(m.params, p.plan.context, cfg.nucleus_p, max_len,
                                            nucleus_seed));
      } else if (name == "pabst") {
        out = decode_plan(a.base, a.cls, p.plan, d).text;
      } else if (name == "pabst_no_entail") {
        DecodeConfig no_entail = d;
        no_entail.lambda_c = 0.0;
        out = decode_plan(a.base, a.cls, p.plan, no_entail).text;
      }
    });
    sys.metrics = score_system(normalized(sys.responses), stories);
    report.systems.push_back(std::move(sys));
  }

  fs::create_directories(cfg.report_dir + "/responses");
  std::vector<std::pair<std::string, SystemMetrics>> rows;
  for (const SystemResult& s : report.systems) {
    rows.push_back({s.name, s.metrics});
    write_lines(cfg.report_dir + "/responses/" + s.name + ".txt", s.responses);
  }
  write_file(cfg.report_dir + "/report.json", report.to_json().dump(2) + "\n");
  write_file(cfg.report_dir + "/report.txt", format_table(rows));

  std::vector<Json> transcript;
  for (size_t k = 0; k < n; ++k) {
    Json responses = Json::object();
    for (const SystemResult& s : report.systems) responses[s.name] = s.responses[k];
    transcript.push_back(Json{{"prompt", k},
                              {"history", history_to_json(a.prompts[k].history)},
                              {"attribute", a.prompts[k].plan.attribute},
                              {"story_id", a.prompts[k].plan.story_id},
                              {"story", stories[k]},
                              {"responses", responses}});
  }
  write_jsonl(cfg.report_dir + "/transcripts.jsonl", transcript);
  return report;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const EvalArtifacts a = load_eval_artifacts(cfg);
  const size_t n = a.prompts.size();
  const std::vector<std::string> stories = story_texts(a);

  std::vector<SweepRow> rows;
  for (double lambda_d : cfg.sweep_lambda_d) {
    SweepRow row;
    row.lambda_d = lambda_d;
    row.responses.resize(n);
    parallel_for(n, cfg.eval_workers, [&](size_t k) {
      DecodeConfig d = prompt_decode_config(cfg, k);
      d.lambda_d = lambda_d;
      row.responses[k] = decode_plan(a.base, a.cls, a.prompts[k].plan, d).text;
    });
    row.metrics = score_system(normalized(row.responses), stories);
    rows.push_back(std::move(row));
  }

  fs::create_directories(cfg.report_dir + "/responses");
  Json out = Json::array();
  std::vector<std::pair<std::string, SystemMetrics>> table;
  for (const SweepRow& r : rows) {
    Json j = metrics_to_json(r.metrics);
    j["lambda_d"] = r.lambda_d;
    out.push_back(j);
    table.push_back({"lambda_d=" + short_double(r.lambda_d), r.metrics});
    write_lines(cfg.report_dir + "/responses/sweep-" + short_double(r.lambda_d) + ".txt",
                r.responses);
  }
  write_file(cfg.report_dir + "/sweep.json", Json{{"sweep", out}}.dump(2) + "\n");
  write_file(cfg.report_dir + "/sweep.txt", format_table(table));
  return rows;
}

void run_all(const ExperimentConfig& cfg, const TrainObserver& observer) {
  run_gen_data(cfg);
  run_train_lm(cfg, Regime::kDialog, observer);
  run_index(cfg);
  run_train_classifier(cfg);
  run_train_lm(cfg, Regime::kPseudo, observer);
  run_train_lm(cfg, Regime::kMultitask, observer);
  run_eval(cfg);
  run_sweep(cfg);
}

}  // namespace pabst
