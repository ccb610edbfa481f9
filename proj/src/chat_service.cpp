#include "pabst/chat_service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

#include "pabst/lm_decode.hpp"

namespace pabst {

namespace {

constexpr uint64_t kSessionIdStream = 1;
constexpr uint64_t kPersonaStream = 2;
constexpr uint64_t kTurnStream = 3;

const std::set<std::string>& knob_keys() {
  static const std::set<std::string> k = {"lambda_c", "lambda_d",   "gamma",     "tau",
                                          "iterations", "backward_steps", "step_size",
                                          "realization"};
  return k;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex_id(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string strip_eos(const Vocabulary& vocab, TokenSequence tokens) {
  const auto eos = std::find(tokens.begin(), tokens.end(), kEos);
  tokens.erase(eos, tokens.end());
  return vocab.decode(tokens);
}

ServiceError bad_request(const std::string& detail) {
  return ServiceError(400, "invalid_request", detail);
}

}  // namespace

ChatService::ChatService(std::shared_ptr<const ServiceModels> models, ServiceConfig cfg)
    : ChatService(models, cfg, default_decoder(models, cfg.nucleus_p)) {}

ChatService::ChatService(std::shared_ptr<const ServiceModels> models, ServiceConfig cfg,
                         TurnDecoder decoder)
    : models_(std::move(models)),
      cfg_(std::move(cfg)),
      decoder_(std::move(decoder)),
      persona_rng_(derive_seed(cfg_.seed, kPersonaStream)) {
  if (!models_) throw ValidationError("service models are missing");
  cfg_.decode.validate();
  if (!cfg_.log_path.empty() && std::filesystem::exists(cfg_.log_path)) replay_log();
}

TurnDecoder ChatService::default_decoder(std::shared_ptr<const ServiceModels> models,
                                         double nucleus_p) {
  return [models, nucleus_p](const TurnRequest& req) {
    const ResponsePlan plan =
        plan_response(models->lm, models->index, req.history, req.persona, req.decode);
    DecodedResponse r;
    std::string mode;
    if (req.baseline == "pabst") {
      r = decode_plan(models->lm, models->cls, plan, req.decode);
      mode = realization_name(r.realization);
    } else {
      r.attribute_index = plan.attribute_index;
      r.attribute = plan.attribute;
      r.attribute_distribution = plan.attribute_distribution;
      r.story_id = plan.story_id;
      r.story_score = plan.story_score;
      r.story = plan.story;
      r.warnings = plan.warnings;
      if (req.baseline == "nucleus") {
        r.text = strip_eos(models->lm.vocab,
                           nucleus_decode(models->lm.params, plan.context, nucleus_p,
                                          req.decode.max_length, derive_seed(req.decode.seed, 2)));
      } else {
        r.text = plan.story.rewritten_text;
      }
      mode = req.baseline;
    }
    Json trace = r.to_json();
    const std::string reply = trace.at("reply");
    trace.erase("reply");
    trace["mode"] = mode;
    trace["system"] = req.baseline;
    return Json{{"reply", reply}, {"trace", trace}};
  };
}

Persona ChatService::resolve_persona(const Json& choice) {
  if (choice.is_null() || (choice.is_string() && choice.get<std::string>() == "random")) {
    if (models_->personas.empty()) throw bad_request("no persona file loaded");
    std::lock_guard<std::mutex> lock(persona_mutex_);
    return models_->personas[uniform_index(persona_rng_, models_->personas.size())];
  }
  try {
    if (choice.is_array()) {
      Json obj{{"id", "custom"}, {"attributes", choice}};
      return persona_from_json(obj);
    }
    if (choice.is_object()) return persona_from_json(choice);
  } catch (const ValidationError& e) {
    throw bad_request(std::string("malformed persona: ") + e.what());
  }
  throw bad_request("persona must be \"random\", a list of attributes or an object");
}

Json ChatService::create_session(const Json& body) {
  if (!body.is_object()) throw bad_request("body must be an object");
  for (const auto& [key, value] : body.items()) {
    if (key != "persona") throw bad_request("unknown field: " + key);
  }
  const Json choice = body.contains("persona") ? body.at("persona") : Json();
  const bool random = choice.is_null() || choice.is_string();
  auto s = std::make_shared<Session>();
  s->persona = resolve_persona(choice);
  s->created = utc_now();
  {
    std::unique_lock<std::shared_mutex> lock(sessions_mutex_);
    do {
      s->ordinal = next_ordinal_++;
      s->id = hex_id(derive_seed(cfg_.seed, derive_seed(kSessionIdStream, s->ordinal)));
    } while (sessions_.count(s->id));
    sessions_[s->id] = s;
  }
  append_log(Json{{"event", "session"},
                  {"session_id", s->id},
                  {"ordinal", s->ordinal},
                  {"created", s->created},
                  {"random", random},
                  {"persona", persona_to_json(s->persona)}});
  return Json{{"session_id", s->id}, {"persona", persona_to_json(s->persona)}};
}

std::shared_ptr<ChatService::Session> ChatService::find(const std::string& id) const {
  std::shared_lock<std::shared_mutex> lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "unknown session: " + id);
  return it->second;
}

Json ChatService::post_message(const std::string& id, const Json& body) {
  const std::shared_ptr<Session> s = find(id);
  if (!body.is_object()) throw bad_request("body must be an object");

  TurnRequest req;
  req.decode = cfg_.decode;
  req.baseline = "pabst";
  Json knobs = Json::object();
  std::string text;
  for (const auto& [key, value] : body.items()) {
    if (key == "text") {
      if (!value.is_string()) throw bad_request("text must be a string");
      text = value.get<std::string>();
    } else if (key == "baseline") {
      if (value.is_null()) continue;
      if (!value.is_string()) throw bad_request("baseline must be a string");
      req.baseline = value.get<std::string>();
      if (req.baseline != "pabst" && req.baseline != "nucleus" && req.baseline != "retrieval") {
        throw bad_request("unknown baseline: " + req.baseline);
      }
    } else if (knob_keys().count(key)) {
      knobs[key] = value;
    } else {
      throw bad_request("unknown field: " + key);
    }
  }
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw bad_request("empty text");
  try {
    req.decode.apply_json(knobs);
  } catch (const ValidationError& e) {
    throw bad_request(e.what());
  }

  std::unique_lock<std::mutex> guard(s->decode_guard, std::try_to_lock);
  if (!guard.owns_lock()) {
    throw ServiceError(409, "busy", "a message for this session is already being decoded");
  }
  {
    std::lock_guard<std::mutex> lock(s->state);
    req.persona = s->persona;
    req.history = s->turns;
  }
  req.history.push_back({Speaker::kUser, text});
  const uint64_t turn = s->traces.size();
  req.decode.seed = derive_seed(derive_seed(derive_seed(cfg_.seed, kTurnStream), s->ordinal), turn);

  Json out;
  try {
    out = decoder_(req);
    if (!out.is_object() || !out.contains("reply") || !out.at("reply").is_string()) {
      throw Error("decoder returned no reply");
    }
  } catch (const std::exception& e) {
    throw ServiceError(500, "decode_failed", e.what());
  }
  if (!out.contains("trace")) out["trace"] = Json::object();
  {
    std::lock_guard<std::mutex> lock(s->state);
    s->turns.push_back({Speaker::kUser, text});
    s->turns.push_back({Speaker::kAgent, out.at("reply").get<std::string>()});
    s->traces.push_back(out.at("trace"));
  }
  append_log(Json{{"event", "turn"},
                  {"session_id", s->id},
                  {"user", text},
                  {"reply", out.at("reply")},
                  {"trace", out.at("trace")}});
  return out;
}

Json ChatService::get_session(const std::string& id) const {
  const std::shared_ptr<Session> s = find(id);
  std::lock_guard<std::mutex> lock(s->state);
  return Json{{"session_id", s->id},
              {"persona", persona_to_json(s->persona)},
              {"created", s->created},
              {"turns", history_to_json(s->turns)},
              {"traces", s->traces}};
}

Json ChatService::health() const {
  return Json{{"status", "ok"}, {"model_version", model_version()}, {"sessions", session_count()}};
}

size_t ChatService::session_count() const {
  std::shared_lock<std::shared_mutex> lock(sessions_mutex_);
  return sessions_.size();
}

std::string ChatService::model_version() const {
  return "lm-" + hex_id(models_->lm.params.fingerprint());
}

void ChatService::append_log(const Json& event) {
  if (cfg_.log_path.empty()) return;
  std::lock_guard<std::mutex> lock(log_mutex_);
  std::ofstream out(cfg_.log_path, std::ios::app);
  if (!out) throw Error("cannot append to session log " + cfg_.log_path);
  out << event.dump() << '\n';
  out.flush();
}

void ChatService::replay_log() {
  read_jsonl(cfg_.log_path, [this](const Json& ev, size_t) {
    const std::string kind = require_string(ev, "event");
    if (kind == "session") {
      auto s = std::make_shared<Session>();
      s->id = require_string(ev, "session_id");
      s->ordinal = ev.at("ordinal").get<uint64_t>();
      s->created = require_string(ev, "created");
      s->persona = persona_from_json(ev.at("persona"));
      if (sessions_.count(s->id)) throw ValidationError("duplicate session id " + s->id);
      if (ev.value("random", false)) uniform_index(persona_rng_, models_->personas.size());
      next_ordinal_ = std::max(next_ordinal_, s->ordinal + 1);
      sessions_[s->id] = s;
    } else if (kind == "turn") {
      const auto it = sessions_.find(require_string(ev, "session_id"));
      if (it == sessions_.end()) throw ValidationError("turn for an unknown session");
      Session& s = *it->second;
      s.turns.push_back({Speaker::kUser, require_string(ev, "user")});
      s.turns.push_back({Speaker::kAgent, require_string(ev, "reply")});
      s.traces.push_back(ev.at("trace"));
    } else {
      throw ValidationError("unknown log event: " + kind);
    }
  });
}

}  // namespace pabst
