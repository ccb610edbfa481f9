#ifndef PABST_CONSISTENCY_HPP_
#define PABST_CONSISTENCY_HPP_

#include <string>
#include <vector>

#include "pabst/checkpoint.hpp"
#include "pabst/common.hpp"
#include "pabst/lm_train.hpp"

namespace pabst {

// Entailment head q: z = r M c + a.r + b.c + bias over the pooled response
// states r and the pooled attribute encoding c; the two-way logits are
// (z, -z), so the entailment probability is logistic(2z).
struct ClassifierParams {
  Matrix M;  // d x d
  Vector a;  // response side
  Vector b;  // attribute side
  double bias = 0.0;

  static ClassifierParams zeros(size_t d);
  size_t dim() const { return static_cast<size_t>(a.size()); }
  ClassifierParams operator-() const;
  bool operator==(const ClassifierParams& other) const;

  // Text file: "d", then M row by row, a, b and bias, as %.17g numbers.
  void save(const std::string& path) const;
  static ClassifierParams load(const std::string& path);
};

// Mean of the rows.
RowVector pool(const Matrix& states);

double entail_logit(const ClassifierParams& cls, const RowVector& response_pooled,
                    const RowVector& attribute_embedding);
double entail_prob(const ClassifierParams& cls, const Matrix& response_states,
                   const RowVector& attribute_embedding);
// log entail_prob, computed without cancellation.
double log_entail_prob(const ClassifierParams& cls, const Matrix& response_states,
                       const RowVector& attribute_embedding);

// Gradient of log entail_prob with respect to every response state row:
// (1 - p) * 2 (M c + a) / T, identical for all rows.
Matrix grad_log_entail(const ClassifierParams& cls, const Matrix& response_states,
                       const RowVector& attribute_embedding);

// Pooled forward states of the attribute text under the LM.
RowVector attribute_embedding(const LanguageModel& lm, const std::string& attribute);

struct EntailmentPair {
  std::string attribute;
  std::string response;
  bool entailed = false;
};

// JSON lines with "attribute", "response" and "label" in {"entail", "neutral"}.
std::vector<EntailmentPair> read_entailment_pairs(const std::string& path);

struct ClassifierTrainResult {
  ClassifierParams params;
  std::vector<double> loss_curve;
  double heldout_accuracy = 0.0;  // 0 when no held-out pairs are given
};

// Full-batch training of the head with the LM frozen, from zero init, using
// the LM trainer's adaptive step (batch_size is ignored). Throws
// ValidationError("degenerate labels") unless both labels occur.
ClassifierTrainResult train_classifier(const std::vector<EntailmentPair>& train,
                                       const std::vector<EntailmentPair>& heldout,
                                       const LanguageModel& lm, const TrainConfig& cfg);

// Fraction of pairs whose predicted label (p > 0.5) matches.
double classifier_accuracy(const ClassifierParams& cls, const LanguageModel& lm,
                           const std::vector<EntailmentPair>& pairs);

}  // namespace pabst

#endif  // PABST_CONSISTENCY_HPP_
