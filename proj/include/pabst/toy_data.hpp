#ifndef PABST_TOY_DATA_HPP_
#define PABST_TOY_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pabst/consistency.hpp"
#include "pabst/narrative.hpp"
#include "pabst/persona.hpp"
#include "pabst/retrieval.hpp"

namespace pabst {

struct ToySizes {
  size_t dialogs = 1200;
  size_t stories = 300;
  size_t personas = 60;
  size_t entail_pairs = 1200;
  size_t prompts = 100;
};

struct ToyCorpora {
  std::vector<Persona> personas;
  std::vector<DialogExample> dialogs;
  std::vector<StoryRecord> stories;
  std::vector<EntailmentPair> entail;
  std::vector<DialogExample> prompts;  // held-out evaluation dialogs
};

// Template-grammar corpora over a fixed set of everyday topics. Personas hold
// first-person attributes, dialog responses paraphrase one attribute of the
// persona, stories are 4-5 sentence third-person narratives sharing content
// words with the attributes, and entailment labels hold by construction.
ToyCorpora generate_toy_corpora(uint64_t seed, const ToySizes& sizes,
                                const NameTable& names = NameTable::bundled());

// Writes personas.jsonl, dialogs.jsonl, stories.jsonl, entail.jsonl and
// prompts.jsonl into dir (created if needed).
void write_toy_corpora(const ToyCorpora& corpora, const std::string& dir);
ToyCorpora read_toy_corpora(const std::string& dir);

// Lower-cased content words (stop words and punctuation removed).
std::vector<std::string> content_words(const std::string& text);

}  // namespace pabst

#endif  // PABST_TOY_DATA_HPP_
