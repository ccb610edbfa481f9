#include "pabst/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace pabst {
namespace {

constexpr std::string_view kLeadingPunct = "\"'([{";
constexpr std::string_view kTrailingPunct = ".,!?;:\"')]}";
constexpr std::array<std::string_view, 7> kClitics = {"n't", "'s", "'re", "'ve",
                                                      "'ll", "'d",  "'m"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool iends_with(std::string_view s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  for (size_t i = 0; i < suffix.size(); ++i) {
    const char a = static_cast<char>(
        std::tolower(static_cast<unsigned char>(s[s.size() - suffix.size() + i])));
    if (a != suffix[i]) return false;
  }
  return true;
}

void split_chunk(std::string_view text, size_t begin, size_t end,
                 std::vector<RawToken>& out) {
  std::vector<RawToken> tail;
  while (begin < end && kLeadingPunct.find(text[begin]) != std::string_view::npos) {
    // A leading apostrophe that starts a clitic ("'s") stays attached.
    if (text[begin] == '\'' && end - begin > 1 &&
        std::isalpha(static_cast<unsigned char>(text[begin + 1]))) {
      break;
    }
    out.push_back({std::string(text.substr(begin, 1)), begin, begin + 1});
    ++begin;
  }
  while (end > begin && kTrailingPunct.find(text[end - 1]) != std::string_view::npos) {
    tail.push_back({std::string(text.substr(end - 1, 1)), end - 1, end});
    --end;
  }
  if (end > begin) {
    std::string_view word = text.substr(begin, end - begin);
    size_t split = end;
    for (std::string_view clitic : kClitics) {
      if (word.size() > clitic.size() && iends_with(word, clitic)) {
        split = end - clitic.size();
        break;
      }
    }
    out.push_back({std::string(text.substr(begin, split - begin)), begin, split});
    if (split < end) {
      out.push_back({std::string(text.substr(split, end - split)), split, end});
    }
  }
  for (auto it = tail.rbegin(); it != tail.rend(); ++it) out.push_back(*it);
}

}  // namespace

std::vector<RawToken> tokenize_raw(std::string_view text) {
  std::vector<RawToken> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) split_chunk(text, i, j, out);
    i = j;
  }
  return out;
}

std::string normalize_token(std::string_view surface) {
  std::string lower(surface);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "i") return "I";
  return lower;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const RawToken& t : tokenize_raw(text)) out.push_back(normalize_token(t.surface));
  return out;
}

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  return std::all_of(token.begin(), token.end(), [](char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
  });
}

bool is_sentence_end(std::string_view token) {
  return token == "." || token == "!" || token == "?";
}

bool is_clitic(std::string_view token) {
  return std::find(kClitics.begin(), kClitics.end(), token) != kClitics.end();
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool sentence_start = true;
  bool no_space_next = true;
  for (const std::string& tok : tokens) {
    const bool attach_left = is_clitic(tok) || tok == "." || tok == "," || tok == "!" ||
                             tok == "?" || tok == ";" || tok == ":" || tok == ")" ||
                             tok == "]" || tok == "}";
    if (!out.empty() && !attach_left && !no_space_next) out += ' ';
    std::string word = tok;
    if (sentence_start && !word.empty() && std::isalpha(static_cast<unsigned char>(word[0]))) {
      word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
      sentence_start = false;
    }
    out += word;
    no_space_next = tok == "(" || tok == "[" || tok == "{";
    if (is_sentence_end(tok)) sentence_start = true;
  }
  return out;
}

std::string normalized_text(std::string_view text) {
  std::string out;
  for (const std::string& t : tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace pabst
