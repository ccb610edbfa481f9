#ifndef PABST_TEXT_HPP_
#define PABST_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pabst {

// A token with its original surface form and byte span in the source text.
struct RawToken {
  std::string surface;
  size_t begin = 0;
  size_t end = 0;
};

// Whitespace-plus-punctuation tokenization that keeps case and offsets.
//
// Rules, applied per whitespace-delimited chunk:
//   1. leading characters from  " ' ( [ {  are split off one at a time;
//   2. trailing characters from  . , ! ? ; : " ' ) ] }  are split off one at
//      a time (innermost last);
//   3. the clitics n't 's 're 've 'll 'd 'm are split from the word end.
std::vector<RawToken> tokenize_raw(std::string_view text);

// Normalized tokens: tokenize_raw, then ASCII lowercase, except that the
// pronoun "i" is always written "I".
std::vector<std::string> tokenize(std::string_view text);

// Case normalization applied by tokenize() to a single surface form.
std::string normalize_token(std::string_view surface);

// Joins tokens with standard English spacing and capitalizes sentence starts.
std::string detokenize(const std::vector<std::string>& tokens);

bool is_punctuation(std::string_view token);
bool is_sentence_end(std::string_view token);
bool is_clitic(std::string_view token);

// Tokens joined by single spaces; the whitespace-token form metrics consume.
std::string normalized_text(std::string_view text);

}  // namespace pabst

#endif  // PABST_TEXT_HPP_
