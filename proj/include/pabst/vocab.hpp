#ifndef PABST_VOCAB_HPP_
#define PABST_VOCAB_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pabst {

using TokenId = uint32_t;

// Reserved ids occupy the lowest indices in this order.
enum ReservedToken : TokenId {
  kPad = 0,
  kBos = 1,
  kEos = 2,
  kUnk = 3,
  kAgent = 4,    // speaker A
  kUser = 5,     // speaker B
  kPersona = 6,  // persona separator
  kNumReserved = 7,
};

class Vocabulary {
 public:
  // Vocabulary with only the reserved tokens.
  Vocabulary();

  // Builds from an explicit token list; the first kNumReserved entries must
  // be the reserved tokens in order.
  explicit Vocabulary(std::vector<std::string> tokens);

  size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Returns kUnk for unknown tokens.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;

  // Tokenizes and maps to ids (no markers added).
  std::vector<TokenId> encode(std::string_view text) const;
  // Drops reserved ids and detokenizes.
  std::string decode(const std::vector<TokenId>& ids) const;

  static bool is_reserved(TokenId id) { return id < kNumReserved; }

  // One token per line, UTF-8.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

const std::vector<std::string>& reserved_token_names();

// Most frequent types up to max_size total entries (reserved included); ties
// broken by lexicographic order. Throws ValidationError("empty corpus").
Vocabulary build_vocab(const std::vector<std::string>& corpus, size_t max_size);

}  // namespace pabst

#endif  // PABST_VOCAB_HPP_
