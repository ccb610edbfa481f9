#ifndef PABST_CHAT_SERVICE_HPP_
#define PABST_CHAT_SERVICE_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pabst/consistency.hpp"
#include "pabst/jsonl.hpp"
#include "pabst/persona.hpp"
#include "pabst/retrieval.hpp"
#include "pabst/soft_decode.hpp"

namespace pabst {

// An error with an HTTP status and a short machine-readable code; rendered as
// {"error": code, "detail": message}.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& detail)
      : Error(detail), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceModels {
  LanguageModel lm;
  ClassifierParams cls;
  StoryIndex index;
  std::vector<Persona> personas;  // pool for "random"
};

struct ServiceConfig {
  DecodeConfig decode;
  double nucleus_p = 0.9;
  uint64_t seed = 0;
  std::string log_path;  // empty: no persistence
};

// One decode request after validation: the history ends with the new user turn.
struct TurnRequest {
  Persona persona;
  DialogHistory history;
  DecodeConfig decode;
  std::string baseline;  // "pabst" | "nucleus" | "retrieval"
};

// Produces {reply, trace} for a request.
using TurnDecoder = std::function<Json(const TurnRequest&)>;

class ChatService {
 public:
  ChatService(std::shared_ptr<const ServiceModels> models, ServiceConfig cfg);
  // As above with a replacement decoder.
  ChatService(std::shared_ptr<const ServiceModels> models, ServiceConfig cfg, TurnDecoder decoder);

  // Body: {} | {"persona": "random"} | {"persona": [attributes]} |
  // {"persona": {"id", "attributes"}}. Returns {session_id, persona}.
  Json create_session(const Json& body);
  // Body: {text, baseline?, lambda_c?, lambda_d?, gamma?, iterations?}.
  // Returns {reply, trace}. Throws 409 "busy" while another message for the
  // same session is being decoded.
  Json post_message(const std::string& id, const Json& body);
  // {session_id, persona, created, turns, traces}
  Json get_session(const std::string& id) const;
  Json health() const;

  size_t session_count() const;
  std::string model_version() const;

  // The real decoder over the given models.
  static TurnDecoder default_decoder(std::shared_ptr<const ServiceModels> models,
                                     double nucleus_p);

 private:
  struct Session {
    std::string id;
    Persona persona;
    std::string created;
    uint64_t ordinal = 0;
    std::mutex decode_guard;     // held for a whole message
    mutable std::mutex state;    // guards the fields below
    DialogHistory turns;
    std::vector<Json> traces;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  Persona resolve_persona(const Json& choice);
  void append_log(const Json& event);
  void replay_log();

  std::shared_ptr<const ServiceModels> models_;
  ServiceConfig cfg_;
  TurnDecoder decoder_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  uint64_t next_ordinal_ = 0;
  std::mutex persona_mutex_;
  Rng persona_rng_;
  std::mutex log_mutex_;
};

}  // namespace pabst

#endif  // PABST_CHAT_SERVICE_HPP_
