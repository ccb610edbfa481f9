#include "pabst/narrative.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "pabst/common.hpp"
#include "pabst/text.hpp"

namespace pabst {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_alpha_word(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '-';
  });
}

bool is_capitalized(std::string_view s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])) != 0;
}

const std::set<std::string>& locative_prepositions() {
  static const std::set<std::string> s = {"to", "in", "at", "from", "into"};
  return s;
}

// Tokens before which a name is an object rather than a subject.
const std::set<std::string>& object_contexts() {
  static const std::set<std::string> s = {
      "to",      "with",   "at",     "for",     "from",   "of",      "by",      "about",
      "on",      "into",   "onto",   "near",    "behind", "beside",  "toward",  "towards",
      "without", "like",   "than",   "saw",     "met",    "called",  "told",    "asked",
      "helped",  "gave",   "hugged", "thanked", "visited", "invited", "found",  "loved",
      "kissed",  "followed", "joined", "married", "watched", "heard", "taught",  "paid",
      "sent",    "showed", "brought", "took",   "left",   "missed",  "liked",   "hated",
      "knew",    "chased", "greeted", "let",    "made",   "told",    "hit",     "beat"};
  return s;
}

// Tokens after "her"/"his" that rule out a following noun.
const std::set<std::string>& non_noun_followers() {
  static const std::set<std::string> s = {
      "the",   "a",       "an",       "this",     "that",  "these", "those", "some",
      "his",   "her",     "my",       "their",    "our",   "your",  "its",   "and",
      "or",    "but",     "so",       "to",       "with",  "at",    "for",   "from",
      "of",    "by",      "about",    "on",       "in",    "into",  "up",    "down",
      "out",   "off",     "back",     "again",    "too",   "very",  "home",  "away",
      "there", "here",    "today",    "yesterday", "tomorrow", "now", "then", "all",
      "when",  "while",   "because",  "if",       "as",    "is",    "was",   "be",
      "been",  "a lot",   "anything", "everything", "something", "nothing", "it",
      "them",  "him",     "me",       "us",       "before", "after", "later", "soon",
      "once",  "twice",   "either",   "neither",  "not"};
  return s;
}

// Adverbs and function words ending in "s" that never take agreement edits.
const std::set<std::string>& agreement_exceptions() {
  static const std::set<std::string> s = {
      "always", "sometimes", "perhaps", "thus",   "afterwards", "towards", "besides",
      "nevertheless", "nonetheless", "was", "his", "yes",  "less",   "unless",
      "across", "plus",  "its",    "this",   "us",    "has",   "is",   "does",  "goes",
      "as",     "was",   "hers",   "whereas", "upstairs", "downstairs", "indoors", "outdoors",
      "nowadays", "anyways", "sometimes"};
  return s;
}

bool is_preverbal_adverb(std::string_view word) {
  static const std::set<std::string> s = {"always", "often",  "never", "sometimes", "usually",
                                          "also",   "still",  "really", "just",     "rarely",
                                          "seldom", "almost", "even",  "only",      "already"};
  const std::string w = lower(word);
  return s.count(w) > 0 || (w.size() > 4 && w.compare(w.size() - 2, 2, "ly") == 0);
}

enum class PronounKind { kNone, kThirdMale, kThirdFemale, kFirst };

struct PronounInfo {
  PronounKind kind = PronounKind::kNone;
  GrammaticalSlot slot = GrammaticalSlot::kSubject;
  bool ambiguous_her = false;  // object or possessive, decided by context
  bool ambiguous_his = false;  // possessive or independent
};

PronounInfo classify_pronoun(std::string_view surface) {
  const std::string w = lower(surface);
  using S = GrammaticalSlot;
  if (w == "he") return {PronounKind::kThirdMale, S::kSubject};
  if (w == "him") return {PronounKind::kThirdMale, S::kObject};
  if (w == "his") return {PronounKind::kThirdMale, S::kPossessive, false, true};
  if (w == "himself") return {PronounKind::kThirdMale, S::kReflexive};
  if (w == "she") return {PronounKind::kThirdFemale, S::kSubject};
  if (w == "her") return {PronounKind::kThirdFemale, S::kObject, true};
  if (w == "hers") return {PronounKind::kThirdFemale, S::kIndependentPossessive};
  if (w == "herself") return {PronounKind::kThirdFemale, S::kReflexive};
  if (w == "i") return {PronounKind::kFirst, S::kSubject};
  if (w == "me") return {PronounKind::kFirst, S::kObject};
  if (w == "my") return {PronounKind::kFirst, S::kPossessive};
  if (w == "mine") return {PronounKind::kFirst, S::kIndependentPossessive};
  if (w == "myself") return {PronounKind::kFirst, S::kReflexive};
  return {};
}

bool followed_by_noun(const std::vector<RawToken>& toks, size_t i) {
  if (i + 1 >= toks.size()) return false;
  const std::string& next = toks[i + 1].surface;
  return is_alpha_word(next) && non_noun_followers().count(lower(next)) == 0;
}

GrammaticalSlot pronoun_slot(const std::vector<RawToken>& toks, size_t i, const PronounInfo& info) {
  if (info.ambiguous_her) {
    return followed_by_noun(toks, i) ? GrammaticalSlot::kPossessive : GrammaticalSlot::kObject;
  }
  if (info.ambiguous_his) {
    return followed_by_noun(toks, i) ? GrammaticalSlot::kPossessive
                                     : GrammaticalSlot::kIndependentPossessive;
  }
  return info.slot;
}

std::vector<bool> sentence_initial_flags(const std::vector<RawToken>& toks) {
  std::vector<bool> flags(toks.size(), false);
  bool start = true;
  for (size_t i = 0; i < toks.size(); ++i) {
    const std::string& s = toks[i].surface;
    if (s == "\"" || s == "'" || s == "(") continue;  // quotes keep the start flag
    flags[i] = start;
    start = is_sentence_end(s);
  }
  return flags;
}

std::vector<size_t> sentence_indices(const std::vector<RawToken>& toks) {
  std::vector<size_t> idx(toks.size(), 0);
  size_t sentence = 0;
  for (size_t i = 0; i < toks.size(); ++i) {
    idx[i] = sentence;
    if (is_sentence_end(toks[i].surface)) ++sentence;
  }
  return idx;
}

bool ends_with_ed(std::string_view word) {
  const std::string w = lower(word);
  return w.size() > 3 && is_alpha_word(w) && w.compare(w.size() - 2, 2, "ed") == 0;
}

CharacterMention name_mention(const std::vector<RawToken>& toks, size_t i) {
  CharacterMention m;
  m.kind = MentionKind::kProperName;
  m.token_begin = i;
  m.token_end = i + 1;
  m.surface = toks[i].surface;
  if (i + 1 < toks.size() && lower(toks[i + 1].surface) == "'s") {
    m.slot = GrammaticalSlot::kPossessive;
    m.token_end = i + 2;
    m.surface += toks[i + 1].surface;
  } else if (i > 0 && (object_contexts().count(lower(toks[i - 1].surface)) > 0 ||
                       ends_with_ed(toks[i - 1].surface))) {
    m.slot = GrammaticalSlot::kObject;
  } else {
    m.slot = GrammaticalSlot::kSubject;
  }
  return m;
}

struct Character {
  std::string name;
  Gender gender = Gender::kUnknown;
  size_t count = 0;
  size_t first_token = 0;
  size_t last_token = 0;
  std::vector<CharacterMention> mentions;
};

bool compatible(Gender character, PronounKind pronoun) {
  if (character == Gender::kUnknown) return true;
  return (character == Gender::kMale && pronoun == PronounKind::kThirdMale) ||
         (character == Gender::kFemale && pronoun == PronounKind::kThirdFemale);
}

std::string first_person_form(GrammaticalSlot slot) {
  switch (slot) {
    case GrammaticalSlot::kSubject:
      return "I";
    case GrammaticalSlot::kObject:
      return "me";
    case GrammaticalSlot::kPossessive:
      return "my";
    case GrammaticalSlot::kIndependentPossessive:
      return "mine";
    case GrammaticalSlot::kReflexive:
      return "myself";
  }
  return "I";
}

std::string rule_name(const CharacterMention& m) {
  std::string base = m.kind == MentionKind::kProperName ? "name" : "pronoun";
  switch (m.slot) {
    case GrammaticalSlot::kSubject:
      return "subject-" + base;
    case GrammaticalSlot::kObject:
      return "object-" + base;
    case GrammaticalSlot::kPossessive:
      return "possessive-" + base;
    case GrammaticalSlot::kIndependentPossessive:
      return "independent-possessive-" + base;
    case GrammaticalSlot::kReflexive:
      return "reflexive-" + base;
  }
  return base;
}

// Present-tense third-person singular -> first person; nullopt if unchanged.
std::optional<std::pair<std::string, std::string>> agree_verb(std::string_view word) {
  static const std::map<std::string, std::string> irregular = {
      {"is", "am"}, {"was", "was"}, {"has", "have"}, {"does", "do"}, {"goes", "go"}};
  if (!is_alpha_word(word) || is_capitalized(word)) return std::nullopt;
  const std::string w(word);
  if (auto it = irregular.find(w); it != irregular.end()) {
    if (it->second == w) return std::nullopt;
    return std::make_pair(it->second, std::string("agreement-irregular"));
  }
  if (agreement_exceptions().count(w) > 0 || w.size() < 3 || w.back() != 's') {
    return std::nullopt;
  }
  auto ends = [&w](std::string_view suffix) {
    return w.size() > suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends("ss") || ends("us") || ends("is") || ends("'s")) return std::nullopt;
  if (ends("ies") && w.size() > 4) {
    return std::make_pair(w.substr(0, w.size() - 3) + "y", std::string("agreement-ies"));
  }
  for (std::string_view suffix : {"ches", "shes", "sses", "xes", "zes", "oes"}) {
    if (ends(suffix)) {
      return std::make_pair(w.substr(0, w.size() - 2), std::string("agreement-es"));
    }
  }
  return std::make_pair(w.substr(0, w.size() - 1), std::string("agreement-s"));
}

}  // namespace

NameTable NameTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read name table: " + path);
  NameTable table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab + 2 != line.size() ||
        (line[tab + 1] != 'm' && line[tab + 1] != 'f')) {
      throw ValidationError("name table line " + std::to_string(lineno) +
                            ": expected name<TAB>m|f");
    }
    table.add(line.substr(0, tab), line[tab + 1] == 'm' ? Gender::kMale : Gender::kFemale);
  }
  return table;
}

const NameTable& NameTable::bundled() {
  static const NameTable table = load(std::string(PABST_RESOURCE_DIR) + "/names.tsv");
  return table;
}

void NameTable::add(std::string name, Gender gender) { genders_[lower(name)] = gender; }

bool NameTable::contains(std::string_view name) const { return genders_.count(lower(name)) > 0; }

Gender NameTable::gender(std::string_view name) const {
  auto it = genders_.find(lower(name));
  return it == genders_.end() ? Gender::kUnknown : it->second;
}

ProtagonistResult find_protagonist(std::string_view text, const NameTable& names) {
  const std::vector<RawToken> toks = tokenize_raw(text);
  const std::vector<bool> initial = sentence_initial_flags(toks);
  const std::vector<size_t> sentence = sentence_indices(toks);

  // Capitalized tokens outside the name table that ever follow a locative
  // preposition are places, as are known names seen only after one.
  std::map<std::string, bool> seen_outside_locative;
  std::set<std::string> seen_after_locative;
  auto is_candidate_token = [&](size_t i) {
    const std::string& s = toks[i].surface;
    if (!is_alpha_word(s) || !is_capitalized(s) || s == "I") return false;
    if (classify_pronoun(s).kind != PronounKind::kNone) return false;
    return !initial[i] || names.contains(s);
  };
  for (size_t i = 0; i < toks.size(); ++i) {
    if (!is_candidate_token(i)) continue;
    const bool locative = i > 0 && locative_prepositions().count(lower(toks[i - 1].surface)) > 0;
    bool& outside = seen_outside_locative[toks[i].surface];
    outside = outside || !locative;
    if (locative) seen_after_locative.insert(toks[i].surface);
  }
  for (const std::string& place : seen_after_locative) {
    if (!names.contains(place)) seen_outside_locative[place] = false;
  }

  std::vector<Character> characters;
  std::map<std::string, size_t> by_name;
  Character narrator;
  narrator.name = "I";
  struct Pending {
    CharacterMention mention;
    PronounKind kind;
  };
  std::vector<Pending> pending;
  ProtagonistResult result;

  for (size_t i = 0; i < toks.size(); ++i) {
    const std::string& s = toks[i].surface;
    if (is_candidate_token(i) && seen_outside_locative[s]) {
      auto [it, inserted] = by_name.emplace(s, characters.size());
      if (inserted) {
        Character c;
        c.name = s;
        c.gender = names.gender(s);
        c.first_token = i;
        characters.push_back(c);
      }
      Character& c = characters[it->second];
      CharacterMention m = name_mention(toks, i);
      c.mentions.push_back(m);
      ++c.count;
      c.last_token = i;
      continue;
    }
    const PronounInfo info = classify_pronoun(s);
    if (info.kind == PronounKind::kNone) continue;
    CharacterMention m;
    m.surface = s;
    m.kind = MentionKind::kPronoun;
    m.token_begin = i;
    m.token_end = i + 1;
    m.slot = pronoun_slot(toks, i, info);
    if (info.kind == PronounKind::kFirst) {
      if (narrator.count == 0) narrator.first_token = i;
      ++narrator.count;
      narrator.mentions.push_back(m);
      continue;
    }
    // Most recent preceding compatible character.
    // Names of known matching gender win over names of unknown gender.
    Character* best = nullptr;
    size_t near_candidates = 0;
    for (const bool known : {true, false}) {
      for (Character& c : characters) {
        if ((c.gender != Gender::kUnknown) != known || !compatible(c.gender, info.kind)) continue;
        if (sentence[c.last_token] + 1 >= sentence[i]) ++near_candidates;
        if (best == nullptr || c.last_token > best->last_token) best = &c;
      }
      if (best != nullptr) break;
    }
    if (best == nullptr) {
      pending.push_back({m, info.kind});
      continue;
    }
    if (near_candidates > 1) {
      result.audit.push_back("pronoun '" + s + "' at token " + std::to_string(i) +
                             " attached to " + best->name + " by recency");
    }
    best->mentions.push_back(m);
    ++best->count;
    best->last_token = i;
  }

  const Character* protagonist = nullptr;
  auto better = [](const Character& a, const Character* b) {
    return b == nullptr || a.count > b->count ||
           (a.count == b->count && a.first_token < b->first_token);
  };
  for (const Character& c : characters) {
    if (better(c, protagonist)) protagonist = &c;
  }
  if (narrator.count > 0 && better(narrator, protagonist)) protagonist = &narrator;
  if (protagonist == nullptr) return result;

  result.name = protagonist->name;
  result.mentions = protagonist->mentions;
  if (protagonist != &narrator) {
    for (const Pending& p : pending) {
      if (compatible(protagonist->gender, p.kind)) result.mentions.push_back(p.mention);
    }
  }
  std::sort(result.mentions.begin(), result.mentions.end(),
            [](const CharacterMention& a, const CharacterMention& b) {
              return a.token_begin < b.token_begin;
            });
  return result;
}

std::vector<CharacterMention> pronoun_chain_mentions(std::string_view text) {
  const std::vector<RawToken> toks = tokenize_raw(text);
  std::vector<CharacterMention> out;
  PronounKind chain = PronounKind::kNone;
  for (size_t i = 0; i < toks.size(); ++i) {
    const PronounInfo info = classify_pronoun(toks[i].surface);
    if (info.kind != PronounKind::kThirdMale && info.kind != PronounKind::kThirdFemale) continue;
    if (chain == PronounKind::kNone) chain = info.kind;
    if (info.kind != chain) continue;
    CharacterMention m;
    m.surface = toks[i].surface;
    m.kind = MentionKind::kPronoun;
    m.token_begin = i;
    m.token_end = i + 1;
    m.slot = pronoun_slot(toks, i, info);
    out.push_back(m);
  }
  return out;
}

Story first_personify(std::string_view text, const std::vector<CharacterMention>& mentions) {
  const std::vector<RawToken> toks = tokenize_raw(text);
  const std::vector<bool> initial = sentence_initial_flags(toks);

  std::vector<CharacterMention> sorted = mentions;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.token_begin < b.token_begin;
  });
  for (size_t k = 0; k < sorted.size(); ++k) {
    const CharacterMention& m = sorted[k];
    if (m.token_begin >= m.token_end || m.token_end > toks.size() ||
        (k > 0 && m.token_begin < sorted[k - 1].token_end)) {
      throw ValidationError("inconsistent mention set");
    }
  }

  std::vector<RewriteEdit> edits;
  std::vector<bool> edited(toks.size(), false);
  for (const CharacterMention& m : sorted) {
    std::string replacement = first_person_form(m.slot);
    const RawToken& head = toks[m.token_begin];
    const bool already_first = classify_pronoun(head.surface).kind == PronounKind::kFirst;
    if (replacement != "I" && initial[m.token_begin] && is_capitalized(head.surface)) {
      replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
    }
    const size_t begin = head.begin;
    const size_t end = toks[m.token_end - 1].end;
    const std::string original(text.substr(begin, end - begin));
    if (!already_first && original != replacement) {
      edits.push_back({begin, end, original, replacement, rule_name(m)});
      for (size_t t = m.token_begin; t < m.token_end; ++t) edited[t] = true;
    }
    // Agreement only follows subjects this call actually rewrote.
    if (m.slot != GrammaticalSlot::kSubject || already_first) continue;
    size_t next = m.token_end;
    while (next < toks.size() && is_preverbal_adverb(toks[next].surface)) ++next;
    if (next >= toks.size() || edited[next]) continue;
    const std::string& verb = toks[next].surface;
    if (verb == "'s" && m.kind == MentionKind::kPronoun) {
      edits.push_back({toks[next].begin, toks[next].end, verb, "'m", "agreement-clitic"});
      edited[next] = true;
    } else if (auto agreed = agree_verb(verb)) {
      edits.push_back({toks[next].begin, toks[next].end, verb, agreed->first, agreed->second});
      edited[next] = true;
    }
  }
  for (size_t i = 0; i < toks.size(); ++i) {
    if (!edited[i] && toks[i].surface == "i") {
      edits.push_back({toks[i].begin, toks[i].end, "i", "I", "capitalize-i"});
    }
  }
  std::sort(edits.begin(), edits.end(),
            [](const RewriteEdit& a, const RewriteEdit& b) { return a.begin < b.begin; });

  Story story;
  story.raw_text = std::string(text);
  size_t cursor = 0;
  for (const RewriteEdit& e : edits) {
    story.rewritten_text.append(text.substr(cursor, e.begin - cursor));
    story.rewritten_text += e.replacement;
    cursor = e.end;
  }
  story.rewritten_text.append(text.substr(cursor));
  story.trace = std::move(edits);
  return story;
}

Story personify_story(std::string id, std::string_view text, const NameTable& names) {
  const ProtagonistResult found = find_protagonist(text, names);
  Story story;
  if (found.name) {
    story = first_personify(text, found.mentions);
  } else {
    story = first_personify(text, pronoun_chain_mentions(text));
    story.warnings.push_back("no protagonist; rewrote the leading pronoun chain");
  }
  for (const std::string& note : found.audit) story.warnings.push_back(note);
  story.id = std::move(id);
  return story;
}

void encode_story(Story& story, const Vocabulary& vocab) {
  story.token_ids = vocab.encode(story.rewritten_text);
  story.token_ids.push_back(kEos);
}

}  // namespace pabst
