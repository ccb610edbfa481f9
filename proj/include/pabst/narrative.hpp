#ifndef PABST_NARRATIVE_HPP_
#define PABST_NARRATIVE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pabst/vocab.hpp"

namespace pabst {

enum class Gender { kMale, kFemale, kUnknown };

// First-name -> gender lookup loaded from "name<TAB>m|f" lines.
class NameTable {
 public:
  NameTable() = default;
  static NameTable load(const std::string& path);
  // The table bundled in resources/names.tsv.
  static const NameTable& bundled();

  void add(std::string name, Gender gender);
  bool contains(std::string_view name) const;
  Gender gender(std::string_view name) const;
  size_t size() const { return genders_.size(); }

 private:
  std::unordered_map<std::string, Gender> genders_;  // keyed by lowercase name
};

enum class MentionKind { kProperName, kPronoun };

enum class GrammaticalSlot {
  kSubject,
  kObject,
  kPossessive,             // determiner: "his books", "John's dog"
  kIndependentPossessive,  // "the book was his"
  kReflexive,
};

// A reference to a character; tokens index into tokenize_raw(text).
struct CharacterMention {
  std::string surface;
  size_t token_begin = 0;
  size_t token_end = 0;  // exclusive; two tokens for "Name 's"
  MentionKind kind = MentionKind::kProperName;
  GrammaticalSlot slot = GrammaticalSlot::kSubject;
};

struct ProtagonistResult {
  // Empty when no character was found ("no protagonist"). "I" when the text
  // is already narrated in the first person.
  std::optional<std::string> name;
  std::vector<CharacterMention> mentions;  // ascending by position
  // Pronouns that had several equally recent compatible candidates.
  std::vector<std::string> audit;
};

// One substitution applied by first_personify; byte offsets into the raw text.
struct RewriteEdit {
  size_t begin = 0;
  size_t end = 0;
  std::string original;
  std::string replacement;
  std::string rule;
};

// A retrieved narrative. token_ids are filled by encode_story().
struct Story {
  std::string id;
  std::string raw_text;
  std::string rewritten_text;
  std::vector<TokenId> token_ids;
  std::vector<RewriteEdit> trace;
  std::vector<std::string> warnings;
};

// Protagonist = the character with the most name mentions plus attributed
// pronoun mentions; ties go to the earliest first mention.
//
// Candidates are capitalized tokens that are not sentence-initial, plus
// sentence-initial tokens found in the name table. Capitalized tokens that
// only ever follow a locative preposition (to, in, at, from, into) are
// treated as places. First-person tokens form a "narrator" candidate so that
// rewritten text maps back onto itself. Each he/she pronoun attaches to the
// most recent preceding character of matching gender (names of unknown
// gender only when none matches); pronouns with no
// preceding candidate default to the protagonist.
ProtagonistResult find_protagonist(std::string_view text,
                                   const NameTable& names = NameTable::bundled());

// Fallback when no protagonist exists: the chain of third-person singular
// pronouns sharing the gender of the first one.
std::vector<CharacterMention> pronoun_chain_mentions(std::string_view text);

// Rewrites the given protagonist mentions into first person:
//   subject -> I, object -> me, possessive -> my, independent -> mine,
//   reflexive -> myself,
// then fixes simple-present agreement on the token right after a rewritten
// subject (is->am, was->was, has->have, does->do, goes->go, -ies->-y,
// -(ch|sh|ss|x|z|o)es -> strip "es", -s -> strip "s") and writes "I" in
// upper case everywhere. Throws ValidationError("inconsistent mention set")
// for overlapping or out-of-range mentions.
Story first_personify(std::string_view text, const std::vector<CharacterMention>& mentions);

// find_protagonist + first_personify, falling back to the pronoun chain with
// a warning when there is no protagonist.
Story personify_story(std::string id, std::string_view text,
                      const NameTable& names = NameTable::bundled());

// Fills story.token_ids from the rewritten text, followed by end-of-sequence.
void encode_story(Story& story, const Vocabulary& vocab);

}  // namespace pabst

#endif  // PABST_NARRATIVE_HPP_
