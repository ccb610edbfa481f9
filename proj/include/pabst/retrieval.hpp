#ifndef PABST_RETRIEVAL_HPP_
#define PABST_RETRIEVAL_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pabst/checkpoint.hpp"
#include "pabst/common.hpp"
#include "pabst/lm.hpp"

namespace pabst {

// Final-layer states of a forward pass over the text alone (no markers).
// Throws ValidationError("no content tokens") for text that tokenizes empty.
Matrix embed_tokens(const LanguageModel& lm, std::string_view text);

struct MatchScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy max-cosine matching without idf weighting: precision averages each
// candidate row's best cosine against the reference, recall the reverse.
// Throws ValidationError("degenerate embedding") for a zero-norm row.
MatchScore greedy_match_f1(const Matrix& candidate, const Matrix& reference);

struct StoryEntry {
  std::string id;
  std::string text;
  TokenSequence token_ids;
  Matrix embeddings;  // one row per token
  Vector norms;
};

// Exhaustively scored, immutable after construction.
class StoryIndex {
 public:
  StoryIndex() = default;
  StoryIndex(uint64_t model_fingerprint, std::vector<StoryEntry> entries);

  const std::vector<StoryEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Fingerprint of the LMParams that produced the embeddings.
  uint64_t model_fingerprint() const { return fingerprint_; }
  const StoryEntry* find(std::string_view id) const;

  // Binary layout (little-endian):
  //   8 bytes "PBSTIDX1", u64 fingerprint, u32 d, u32 count, then per entry
  //   u32-prefixed id and text, u32 token count, u32 ids, f64 rows.
  void save(const std::string& path) const;
  static StoryIndex load(const std::string& path);

 private:
  uint64_t fingerprint_ = 0;
  std::vector<StoryEntry> entries_;
};

struct StoryRecord {
  std::string id;
  std::string text;
};

// JSON lines with string fields "id" and "text".
std::vector<StoryRecord> read_story_corpus(const std::string& path);

StoryIndex index_stories(const LanguageModel& lm, const std::vector<StoryRecord>& stories);
StoryIndex index_stories(const LanguageModel& lm, const std::string& corpus_path);

struct RetrievalResult {
  const StoryEntry* story = nullptr;
  MatchScore score;
};

// Highest f1 with the attribute as candidate and each story as reference;
// ties go to the lexicographically lowest story id.
RetrievalResult retrieve(const StoryIndex& index, const LanguageModel& lm,
                         std::string_view attribute);
RetrievalResult retrieve(const StoryIndex& index, const Matrix& attribute_rows);

}  // namespace pabst

#endif  // PABST_RETRIEVAL_HPP_
