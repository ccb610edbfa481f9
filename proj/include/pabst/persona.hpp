#ifndef PABST_PERSONA_HPP_
#define PABST_PERSONA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pabst/checkpoint.hpp"
#include "pabst/jsonl.hpp"
#include "pabst/lm.hpp"

namespace pabst {

struct Persona {
  std::string id;
  std::vector<std::string> attributes;
};

enum class Speaker { kAgent, kUser };

struct DialogTurn {
  Speaker speaker = Speaker::kUser;
  std::string text;
  bool operator==(const DialogTurn&) const = default;
};

using DialogHistory = std::vector<DialogTurn>;

const char* speaker_name(Speaker s);
Speaker parse_speaker(const std::string& name);  // "agent" | "user"

// Speakers must alternate and every text must be nonempty. When
// awaiting_reply is set the last turn must be the user's.
void validate_history(const DialogHistory& history, bool awaiting_reply);

// The last `window` turns.
DialogHistory last_turns(const DialogHistory& history, size_t window);

// [BOS] (speaker marker, turn tokens)* [persona] attribute tokens [agent].
// Oldest turns are dropped until the encoding fits max_tokens; throws
// ValidationError if the persona part alone does not fit.
TokenSequence encode_context(const Vocabulary& vocab, const DialogHistory& history,
                             const std::string& attribute, size_t max_tokens);

// Speaker-marked tokens of the turns, without BOS.
TokenSequence encode_history(const Vocabulary& vocab, const DialogHistory& history);

// softmax_i(cos(pool(enc(history window)), pool(enc(attribute_i))) / temperature).
// An empty history yields the uniform distribution.
std::vector<double> attribute_distribution(const LanguageModel& lm, const DialogHistory& history,
                                           const Persona& persona, double temperature,
                                           size_t window = 4);

// Seeded categorical draw, or the first arg-max when greedy is set.
size_t sample_attribute(const std::vector<double>& dist, uint64_t seed, bool greedy = false);

// JSON lines with "id" and "attributes".
std::vector<Persona> read_personas(const std::string& path);
Json persona_to_json(const Persona& persona);
Persona persona_from_json(const Json& obj);

// A training or evaluation dialog: history, persona attributes and the
// agent's reference response.
struct DialogExample {
  DialogHistory history;
  std::vector<std::string> persona;
  std::string response;
};

// JSON lines with "history" ([{speaker, text}]), "persona" and "response".
std::vector<DialogExample> read_dialogs(const std::string& path);
Json dialog_to_json(const DialogExample& example);
Json history_to_json(const DialogHistory& history);
DialogHistory history_from_json(const Json& turns);

}  // namespace pabst

#endif  // PABST_PERSONA_HPP_
