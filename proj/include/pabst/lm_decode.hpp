#ifndef PABST_LM_DECODE_HPP_
#define PABST_LM_DECODE_HPP_

#include <cstdint>

#include "pabst/lm.hpp"

namespace pabst {

struct GreedyResult {
  TokenSequence tokens;
  // Row i is the final state whose logits produced tokens[i] (the state at
  // the position preceding token i), so argmax(W states.row(i)) == tokens[i].
  Matrix states;
};

// Argmax decoding (lowest id wins ties). Stops after emitting end-of-sequence
// unless stop_at_eos is false, in which case exactly max_len tokens are made.
GreedyResult greedy_decode(const LMParams& params, const TokenSequence& context,
                           size_t max_len, bool stop_at_eos = true);

// Indices of the smallest prefix of the probability-sorted distribution whose
// mass reaches p (sorted by probability descending, then id ascending).
std::vector<TokenId> nucleus_set(const RowVector& probs, double p);

// Top-p sampling; seeded and deterministic. Throws ValidationError if p is
// outside (0, 1].
TokenSequence nucleus_decode(const LMParams& params, const TokenSequence& context, double p,
                             size_t max_len, uint64_t seed);

// Index of the largest entry; lowest index on ties.
TokenId argmax(const RowVector& v);

// Seeded categorical draw.
TokenId sample_categorical(const RowVector& probs, Rng& rng);

}  // namespace pabst

#endif  // PABST_LM_DECODE_HPP_
