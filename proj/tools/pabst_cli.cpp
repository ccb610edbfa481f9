#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "pabst/chat_http.hpp"
#include "pabst/experiment.hpp"

using namespace pabst;

namespace {

struct Options {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;  // key=value
  bool quiet = false;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig() : ExperimentConfig::load(o.config_path);
  for (const std::string& kv : o.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

TrainObserver progress(const Options& o, const std::string& label, size_t total) {
  if (o.quiet) return {};
  const size_t every = std::max<size_t>(1, total / 20);
  return [label, total, every](size_t step, double loss) {
    if ((step + 1) % every == 0 || step + 1 == total) {
      std::fprintf(stderr, "[%s] step %zu/%zu loss %.4f\n", label.c_str(), step + 1, total, loss);
    }
  };
}

void print_metrics(const std::string& name, const SystemMetrics& m) {
  std::printf("%-16s D-1 %7.3f  D-2 %7.3f  ENTR %6.4f  overlap %6.4f  n %zu\n", name.c_str(), m.d1,
              m.d2, m.entr, m.mean_overlap_f1, m.n);
}

LanguageModel require_lm(const ExperimentConfig& cfg) {
  const std::string path = cfg.lm_path(Regime::kDialog);
  if (!std::ifstream(path)) throw ValidationError("missing artifact: " + path);
  return load_checkpoint(path);
}

std::shared_ptr<ServiceModels> load_models(const ExperimentConfig& cfg,
                                           const std::string& personas_path) {
  auto m = std::make_shared<ServiceModels>();
  m->lm = require_lm(cfg);
  for (const std::string& p : {cfg.classifier_path(), cfg.index_path()}) {
    if (!std::ifstream(p)) throw ValidationError("missing artifact: " + p);
  }
  m->cls = ClassifierParams::load(cfg.classifier_path());
  m->index = StoryIndex::load(cfg.index_path());
  if (!personas_path.empty()) m->personas = read_personas(personas_path);
  return m;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona dialog generation with retrieved background stories"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed (overrides the config)");
  app.add_option("--out", o.out,
                 "output directory: data dir for gen-data, work dir for training and index, "
                 "report dir for eval and sweep-lambda; output file for decode");
  app.add_option("--set", o.overrides, "config override key=value (repeatable)");
  app.add_flag("-q,--quiet", o.quiet, "no progress output");

  auto* gen = app.add_subcommand("gen-data", "write the synthetic corpora");
  std::string regime_name = "dialog";
  auto* train = app.add_subcommand("train-lm", "train a dialog model");
  train->add_option("--regime", regime_name, "dialog | pseudo | multitask")
      ->check(CLI::IsMember({"dialog", "pseudo", "multitask"}));
  auto* train_cls = app.add_subcommand("train-classifier", "train the entailment head");
  auto* index = app.add_subcommand("index", "embed the story corpus");

  auto* decode = app.add_subcommand("decode", "decode responses for dialog examples");
  std::string decode_input;
  std::vector<std::string> attributes, turns;
  std::vector<std::string> decode_overrides;
  decode->add_option("--input", decode_input, "dialog corpus (JSON lines)")->check(CLI::ExistingFile);
  decode->add_option("--attribute", attributes, "persona attribute (repeatable)");
  decode->add_option("--turn", turns, "history turn, alternating and ending with the user (repeatable)");
  decode->add_option("--decode", decode_overrides, "decode override key=value (repeatable)");

  auto* eval = app.add_subcommand("eval", "decode the shared prompts with every system");
  auto* sweep = app.add_subcommand("sweep-lambda", "PABST over the lambda_d sweep");
  auto* all = app.add_subcommand("run-all", "every stage in order");

  auto* serve = app.add_subcommand("serve", "HTTP chat service");
  std::string host = "127.0.0.1", static_dir, log_path, personas_path;
  int port = 8080;
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port")->check(CLI::Range(1, 65535));
  serve->add_option("--static", static_dir, "directory served under /");
  serve->add_option("--log", log_path, "append-only session log (replayed on start)");
  serve->add_option("--personas", personas_path, "persona file for random personas "
                                                 "(default: data dir personas.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg = load_config(o);
    if (gen->parsed()) {
      if (!o.out.empty()) cfg.data_dir = o.out;
      run_gen_data(cfg);
      if (!o.quiet) std::fprintf(stderr, "corpora written to %s\n", cfg.data_dir.c_str());
    } else if (train->parsed()) {
      if (!o.out.empty()) cfg.work_dir = o.out;
      const Regime r = parse_regime(regime_name);
      const TrainResult res = run_train_lm(cfg, r, progress(o, regime_name, cfg.lm.steps));
      std::printf("%s final loss %.6f\n", cfg.lm_path(r).c_str(),
                  res.loss_curve.empty() ? 0.0 : res.loss_curve.back());
    } else if (train_cls->parsed()) {
      if (!o.out.empty()) cfg.work_dir = o.out;
      const ClassifierTrainResult res = run_train_classifier(cfg);
      std::printf("%s held-out accuracy %.4f\n", cfg.classifier_path().c_str(), res.heldout_accuracy);
    } else if (index->parsed()) {
      if (!o.out.empty()) cfg.work_dir = o.out;
      const StoryIndex idx = run_index(cfg);
      std::printf("%s stories %zu\n", cfg.index_path().c_str(), idx.size());
    } else if (decode->parsed()) {
      for (const std::string& kv : decode_overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw ValidationError("--decode expects key=value");
        cfg.decode.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      cfg.decode.validate();
      std::vector<DialogExample> examples;
      if (!decode_input.empty()) {
        examples = read_dialogs(decode_input);
      } else {
        if (attributes.empty() || turns.empty()) {
          throw ValidationError("decode needs --input, or --attribute and --turn");
        }
        DialogExample ex;
        ex.persona = attributes;
        for (size_t i = 0; i < turns.size(); ++i) {
          const bool user = (turns.size() - 1 - i) % 2 == 0;
          ex.history.push_back({user ? Speaker::kUser : Speaker::kAgent, turns[i]});
        }
        validate_history(ex.history, true);
        examples.push_back(ex);
      }
      const auto models = load_models(cfg, "");
      std::ofstream file;
      if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw ValidationError("cannot write " + o.out);
      }
      std::ostream& out = o.out.empty() ? std::cout : file;
      for (size_t k = 0; k < examples.size(); ++k) {
        DecodeConfig d = cfg.decode;
        d.seed = derive_seed(cfg.seed, k);
        const Persona persona{"decode-" + std::to_string(k), examples[k].persona};
        const DecodedResponse r =
            pabst_decode(models->lm, models->cls, models->index, examples[k].history, persona, d);
        out << r.to_json().dump() << '\n';
      }
    } else if (eval->parsed()) {
      if (!o.out.empty()) cfg.report_dir = o.out;
      const EvalReport report = run_eval(cfg);
      for (const SystemResult& s : report.systems) print_metrics(s.name, s.metrics);
    } else if (sweep->parsed()) {
      if (!o.out.empty()) cfg.report_dir = o.out;
      for (const SweepRow& row : run_sweep(cfg)) {
        char label[32];
        std::snprintf(label, sizeof label, "lambda_d=%g", row.lambda_d);
        print_metrics(label, row.metrics);
      }
    } else if (all->parsed()) {
      if (!o.out.empty()) cfg.report_dir = o.out;
      run_all(cfg, progress(o, "train", cfg.lm.steps));
      std::printf("reports written to %s\n", cfg.report_dir.c_str());
    } else if (serve->parsed()) {
      const std::string pool = personas_path.empty() ? cfg.data_path("personas") : personas_path;
      ServiceConfig sc;
      sc.decode = cfg.decode;
      sc.nucleus_p = cfg.nucleus_p;
      sc.seed = cfg.seed;
      sc.log_path = log_path;
      ChatService service(load_models(cfg, pool), sc);
      httplib::Server server;
      install_routes(server, service, static_dir);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "serving %s on http://%s:%d\n", service.model_version().c_str(),
                   host.c_str(), port);
      if (!server.listen(host, port)) throw ValidationError("cannot listen on " + host);
      g_server = nullptr;
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
