#include "pabst/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "pabst/common.hpp"
#include "pabst/text.hpp"

namespace pabst {

const std::vector<std::string>& reserved_token_names() {
  static const std::vector<std::string> names = {"<pad>",   "<bos>",  "<eos>",    "<unk>",
                                                 "<agent>", "<user>", "<persona>"};
  return names;
}

Vocabulary::Vocabulary() : Vocabulary(reserved_token_names()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& reserved = reserved_token_names();
  if (tokens_.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), tokens_.begin())) {
    throw ValidationError("vocabulary must start with the reserved tokens");
  }
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ValidationError("duplicate vocabulary entry: " + tokens_[i]);
    }
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const std::string& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> words;
  for (TokenId id : ids) {
    if (!is_reserved(id)) words.push_back(token(id));
  }
  return detokenize(words);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write vocabulary: " + path);
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read vocabulary: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, size_t max_size) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  const auto& reserved = reserved_token_names();
  if (max_size < reserved.size()) {
    throw ValidationError("max vocabulary size is smaller than the reserved set");
  }
  std::map<std::string, size_t> counts;
  for (const std::string& text : corpus) {
    for (std::string& t : tokenize(text)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, size_t>> ranked;
  for (auto& [tok, n] : counts) {
    if (std::find(reserved.begin(), reserved.end(), tok) == reserved.end()) {
      ranked.emplace_back(tok, n);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = reserved;
  for (const auto& [tok, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens));
}

}  // namespace pabst
