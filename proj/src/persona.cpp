#include "pabst/persona.hpp"

#include <algorithm>
#include <cmath>

#include "pabst/consistency.hpp"
#include "pabst/lm_decode.hpp"
#include "pabst/retrieval.hpp"

namespace pabst {

const char* speaker_name(Speaker s) { return s == Speaker::kAgent ? "agent" : "user"; }

Speaker parse_speaker(const std::string& name) {
  if (name == "agent") return Speaker::kAgent;
  if (name == "user") return Speaker::kUser;
  throw ValidationError("speaker must be \"agent\" or \"user\"");
}

void validate_history(const DialogHistory& history, bool awaiting_reply) {
  for (size_t i = 0; i < history.size(); ++i) {
    if (history[i].text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw ValidationError("empty turn text");
    }
    if (i > 0 && history[i].speaker == history[i - 1].speaker) {
      throw ValidationError("speakers must alternate");
    }
  }
  if (awaiting_reply && (history.empty() || history.back().speaker != Speaker::kUser)) {
    throw ValidationError("the last turn must be the user's");
  }
}

DialogHistory last_turns(const DialogHistory& history, size_t window) {
  const size_t start = history.size() > window ? history.size() - window : 0;
  return DialogHistory(history.begin() + static_cast<long>(start), history.end());
}

TokenSequence encode_history(const Vocabulary& vocab, const DialogHistory& history) {
  TokenSequence out;
  for (const DialogTurn& turn : history) {
    out.push_back(turn.speaker == Speaker::kAgent ? kAgent : kUser);
    const TokenSequence ids = vocab.encode(turn.text);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

TokenSequence encode_context(const Vocabulary& vocab, const DialogHistory& history,
                             const std::string& attribute, size_t max_tokens) {
  TokenSequence tail = {kPersona};
  const TokenSequence attr = vocab.encode(attribute);
  tail.insert(tail.end(), attr.begin(), attr.end());
  tail.push_back(kAgent);
  if (tail.size() + 1 > max_tokens) throw ValidationError("context does not fit the model");
  for (size_t skip = 0; skip <= history.size(); ++skip) {
    const DialogHistory kept(history.begin() + static_cast<long>(skip), history.end());
    TokenSequence out = {kBos};
    const TokenSequence turns = encode_history(vocab, kept);
    if (1 + turns.size() + tail.size() > max_tokens) continue;
    out.insert(out.end(), turns.begin(), turns.end());
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }
  throw ValidationError("context does not fit the model");
}

std::vector<double> attribute_distribution(const LanguageModel& lm, const DialogHistory& history,
                                           const Persona& persona, double temperature,
                                           size_t window) {
  if (persona.attributes.empty()) throw ValidationError("empty persona");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  const size_t n = persona.attributes.size();
  TokenSequence ids = encode_history(lm.vocab, last_turns(history, window));
  if (ids.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  const size_t limit = lm.params.shape.max_positions;
  if (ids.size() > limit) ids.erase(ids.begin(), ids.end() - static_cast<long>(limit));
  const RowVector h = pool(forward(lm.params, ids).states);

  RowVector logits(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    const RowVector a = attribute_embedding(lm, persona.attributes[i]);
    const double denom = h.norm() * a.norm();
    if (!(denom > 0.0)) throw ValidationError("degenerate embedding");
    logits(static_cast<Eigen::Index>(i)) = h.dot(a) / denom;
  }
  const RowVector p = softmax(logits, temperature);
  return std::vector<double>(p.data(), p.data() + p.size());
}

size_t sample_attribute(const std::vector<double>& dist, uint64_t seed, bool greedy) {
  if (dist.empty()) throw ValidationError("empty distribution");
  const RowVector p = Eigen::Map<const RowVector>(dist.data(), static_cast<Eigen::Index>(dist.size()));
  if (greedy) return argmax(p);
  Rng rng(seed);
  return sample_categorical(p, rng);
}

Json persona_to_json(const Persona& persona) {
  return Json{{"id", persona.id}, {"attributes", persona.attributes}};
}

Persona persona_from_json(const Json& obj) {
  Persona p{require_string(obj, "id"), require_string_list(obj, "attributes")};
  if (p.attributes.empty()) throw ValidationError("persona has no attributes");
  for (const std::string& a : p.attributes) {
    if (a.find_first_not_of(" \t") == std::string::npos) {
      throw ValidationError("empty persona attribute");
    }
  }
  return p;
}

std::vector<Persona> read_personas(const std::string& path) {
  std::vector<Persona> out;
  read_jsonl(path, [&out](const Json& obj, size_t) { out.push_back(persona_from_json(obj)); });
  return out;
}

Json history_to_json(const DialogHistory& history) {
  Json turns = Json::array();
  for (const DialogTurn& t : history) {
    turns.push_back(Json{{"speaker", speaker_name(t.speaker)}, {"text", t.text}});
  }
  return turns;
}

DialogHistory history_from_json(const Json& turns) {
  if (!turns.is_array()) throw ValidationError("history must be a list");
  DialogHistory out;
  for (const Json& t : turns) {
    out.push_back({parse_speaker(require_string(t, "speaker")), require_string(t, "text")});
  }
  return out;
}

Json dialog_to_json(const DialogExample& ex) {
  return Json{{"history", history_to_json(ex.history)},
              {"persona", ex.persona},
              {"response", ex.response}};
}

std::vector<DialogExample> read_dialogs(const std::string& path) {
  std::vector<DialogExample> out;
  read_jsonl(path, [&out](const Json& obj, size_t) {
    if (!obj.contains("history")) throw ValidationError("missing field 'history'");
    DialogExample ex{history_from_json(obj.at("history")), require_string_list(obj, "persona"),
                     require_string(obj, "response")};
    validate_history(ex.history, true);
    if (ex.persona.empty()) throw ValidationError("persona has no attributes");
    out.push_back(std::move(ex));
  });
  return out;
}

}  // namespace pabst
