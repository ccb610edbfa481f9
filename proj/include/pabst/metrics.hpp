#ifndef PABST_METRICS_HPP_
#define PABST_METRICS_HPP_

#include <map>
#include <string>
#include <vector>

#include "pabst/jsonl.hpp"

namespace pabst {

// n-gram counts over whitespace tokens of a response corpus.
struct CorpusStats {
  std::map<std::vector<std::string>, size_t> ngrams[3];  // n = 1, 2, 3
  size_t totals[3] = {0, 0, 0};
  size_t responses = 0;

  static CorpusStats build(const std::vector<std::string>& responses);
};

enum class DistinctMode { kPooled, kPerResponse };

// 100 * distinct / total n-grams pooled over the corpus (or the mean of the
// per-response ratios). Throws ValidationError("no n-grams") when no
// response has n tokens.
double distinct_n(const std::vector<std::string>& responses, size_t n,
                  DistinctMode mode = DistinctMode::kPooled);

// Natural-log Shannon entropy of the pooled n-gram distribution.
double ngram_entropy(const std::vector<std::string>& responses, size_t n);

// Geometric mean of the 1-, 2- and 3-gram entropies; 0 when any is 0.
double entr(const std::vector<std::string>& responses);

// Unigram multiset F1 between two texts (tokenized and case-folded).
double overlap_f1(const std::string& response, const std::string& story);

struct SystemMetrics {
  double d1 = 0.0;
  double d2 = 0.0;
  double entr = 0.0;
  double mean_overlap_f1 = 0.0;
  size_t n = 0;
};

// Metrics over responses given as normalized texts; overlaps pair each
// response with its reference story.
SystemMetrics score_system(const std::vector<std::string>& responses,
                           const std::vector<std::string>& stories);

Json metrics_to_json(const SystemMetrics& m);
// Aligned text table with one row per system in the given order.
std::string format_table(const std::vector<std::pair<std::string, SystemMetrics>>& rows);

}  // namespace pabst

#endif  // PABST_METRICS_HPP_
