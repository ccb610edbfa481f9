#ifndef PABST_LM_TRAIN_HPP_
#define PABST_LM_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pabst/lm.hpp"

namespace pabst {

// One conditional training example. The loss covers target positions only;
// the model reads context ++ target and predicts each target token.
struct TrainExample {
  TokenSequence context;
  TokenSequence target;
};

struct TrainConfig {
  size_t steps = 1500;
  size_t batch_size = 8;
  double learning_rate = 3e-3;
  size_t warmup_steps = 50;
  double clip_norm = 1.0;
  // L2 penalty 0.5 * weight_decay * |w|^2 added to the loss (biases included).
  double weight_decay = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  LMParams params;
  std::vector<double> loss_curve;  // mean batch loss per step
};

// Mean next-token cross-entropy over all target tokens in the batch. When
// grad is non-null it is overwritten with the gradient (same shape as params).
double loss_and_gradient(const LMParams& params, std::span<const TrainExample> batch,
                         LMParams* grad);

// Optional per-step observer: (step, loss).
using TrainObserver = std::function<void(size_t, double)>;

// Momentum-free adaptive optimizer (RMSProp with bias correction) with linear
// warmup and global-norm clipping. Throws NumericError("diverged ...") on a
// non-finite loss.
TrainResult train_lm(const std::vector<TrainExample>& corpus, const LMParams& init,
                     const TrainConfig& cfg, const TrainObserver& observer = {});

// Draws the next training example; called batch_size times per step.
using ExampleSource = std::function<TrainExample()>;

// As train_lm, with examples drawn from a caller-supplied stream.
TrainResult train_lm_stream(const ExampleSource& source, const LMParams& init,
                            const TrainConfig& cfg, const TrainObserver& observer = {});

// Epoch-shuffled sampling over a fixed corpus, seeded. The corpus must
// outlive the returned source.
ExampleSource shuffled_source(const std::vector<TrainExample>& corpus, uint64_t seed);

// exp(mean target cross-entropy) over the corpus.
double target_perplexity(const LMParams& params, const std::vector<TrainExample>& corpus);

}  // namespace pabst

#endif  // PABST_LM_TRAIN_HPP_
