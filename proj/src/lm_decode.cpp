#include "pabst/lm_decode.hpp"

#include <algorithm>
#include <numeric>

namespace pabst {
namespace {

void check_context(const LMParams& params, const TokenSequence& context, size_t max_len) {
  if (context.empty()) throw ValidationError("decoding needs a non-empty context");
  if (context.size() + max_len > params.shape.max_positions) {
    throw ValidationError("context too long: " + std::to_string(context.size()) + " + " +
                          std::to_string(max_len) + " exceeds " +
                          std::to_string(params.shape.max_positions) + " positions");
  }
  validate_sequence(context, params.shape.vocab_size);
}

}  // namespace

TokenId argmax(const RowVector& v) {
  TokenId best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<TokenId>(i);
  }
  return best;
}

TokenId sample_categorical(const RowVector& probs, Rng& rng) {
  const double u = uniform01(rng) * probs.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  // Rounding can leave u at the total; take the last positive entry.
  for (Eigen::Index i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<TokenId>(i);
  }
  return 0;
}

GreedyResult greedy_decode(const LMParams& params, const TokenSequence& context,
                           size_t max_len, bool stop_at_eos) {
  check_context(params, context, max_len);
  GreedyResult out;
  out.states.resize(0, params.shape.d_model);
  if (max_len == 0) return out;
  DecoderCache cache(params);
  RowVector state;
  for (TokenId id : context) state = cache.step_token(id);
  std::vector<RowVector> rows;
  for (size_t t = 0; t < max_len; ++t) {
    const TokenId next = argmax(project_logits(params, state));
    rows.push_back(state);
    out.tokens.push_back(next);
    if (next == kEos && stop_at_eos) break;
    if (t + 1 < max_len) state = cache.step_token(next);
  }
  out.states.resize(static_cast<Eigen::Index>(rows.size()), params.shape.d_model);
  for (size_t i = 0; i < rows.size(); ++i) out.states.row(static_cast<Eigen::Index>(i)) = rows[i];
  check_finite(out.states, "greedy decode");
  return out;
}

std::vector<TokenId> nucleus_set(const RowVector& probs, double p) {
  std::vector<TokenId> order(static_cast<size_t>(probs.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&probs](TokenId a, TokenId b) { return probs[a] > probs[b]; });
  double mass = 0.0;
  size_t keep = 0;
  while (keep < order.size()) {
    mass += probs[order[keep]];
    ++keep;
    if (mass >= p) break;
  }
  order.resize(keep);
  return order;
}

TokenSequence nucleus_decode(const LMParams& params, const TokenSequence& context, double p,
                             size_t max_len, uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("nucleus p must be in (0, 1]");
  check_context(params, context, max_len);
  TokenSequence out;
  if (max_len == 0) return out;
  Rng rng(seed);
  DecoderCache cache(params);
  RowVector state;
  for (TokenId id : context) state = cache.step_token(id);
  for (size_t t = 0; t < max_len; ++t) {
    const RowVector probs = softmax(project_logits(params, state));
    const std::vector<TokenId> keep = nucleus_set(probs, p);
    RowVector restricted = RowVector::Zero(probs.size());
    for (TokenId id : keep) restricted[id] = probs[id];
    const TokenId next = sample_categorical(restricted, rng);
    out.push_back(next);
    if (next == kEos) break;
    if (t + 1 < max_len) state = cache.step_token(next);
  }
  return out;
}

}  // namespace pabst
