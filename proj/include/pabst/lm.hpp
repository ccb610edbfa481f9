#ifndef PABST_LM_HPP_
#define PABST_LM_HPP_

#include <cstdint>
#include <span>
#include <type_traits>
#include <string_view>
#include <vector>

#include "pabst/common.hpp"
#include "pabst/vocab.hpp"

namespace pabst {

using TokenSequence = std::vector<TokenId>;

// Checks every id < vocab_size and that nothing follows an end-of-sequence id.
void validate_sequence(const TokenSequence& ids, size_t vocab_size);

struct ModelShape {
  uint32_t d_model = 64;
  uint32_t n_layers = 2;
  uint32_t n_heads = 2;
  uint32_t vocab_size = 0;
  uint32_t max_positions = 192;

  void validate() const;
  uint32_t head_dim() const { return d_model / n_heads; }
  bool operator==(const ModelShape&) const = default;
};

struct LayerParams {
  Vector ln1_gain, ln1_bias;
  Matrix w_qkv;  // d x 3d, columns [q | k | v], heads contiguous inside each
  Vector b_qkv;
  Matrix w_attn_out;  // d x d
  Vector b_attn_out;
  Vector ln2_gain, ln2_bias;
  Matrix w_fc;  // d x 4d
  Vector b_fc;
  Matrix w_proj;  // 4d x d
  Vector b_proj;
};

// All weights of the decoder. token_embedding is tied: it embeds input ids
// and projects final states to logits (logits = W o).
struct LMParams {
  ModelShape shape;
  Matrix token_embedding;     // V x d
  Matrix position_embedding;  // T_max x d
  std::vector<LayerParams> layers;
  Vector lnf_gain, lnf_bias;

  static LMParams zeros(const ModelShape& shape);
  static LMParams random(const ModelShape& shape, uint64_t seed);

  // Visits every tensor in checkpoint order:
  //   token_embedding, position_embedding,
  //   per layer: ln1_gain, ln1_bias, w_qkv, b_qkv, w_attn_out, b_attn_out,
  //              ln2_gain, ln2_bias, w_fc, b_fc, w_proj, b_proj,
  //   lnf_gain, lnf_bias.
  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  size_t num_parameters() const;
  bool all_finite() const;
  // Rounds every parameter to the nearest float so checkpoints are lossless.
  void round_to_float();
  // FNV-1a over the float32 image of all parameters.
  uint64_t fingerprint() const;
  bool operator==(const LMParams& other) const;

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    auto span_of = [](auto& t) {
      using Elem = std::remove_reference_t<decltype(*t.data())>;
      return std::span<Elem>(t.data(), static_cast<size_t>(t.size()));
    };
    f("token_embedding", span_of(self.token_embedding));
    f("position_embedding", span_of(self.position_embedding));
    for (auto& l : self.layers) {
      f("ln1_gain", span_of(l.ln1_gain));
      f("ln1_bias", span_of(l.ln1_bias));
      f("w_qkv", span_of(l.w_qkv));
      f("b_qkv", span_of(l.b_qkv));
      f("w_attn_out", span_of(l.w_attn_out));
      f("b_attn_out", span_of(l.b_attn_out));
      f("ln2_gain", span_of(l.ln2_gain));
      f("ln2_bias", span_of(l.ln2_bias));
      f("w_fc", span_of(l.w_fc));
      f("b_fc", span_of(l.b_fc));
      f("w_proj", span_of(l.w_proj));
      f("b_proj", span_of(l.b_proj));
    }
    f("lnf_gain", span_of(self.lnf_gain));
    f("lnf_bias", span_of(self.lnf_bias));
  }
};

// Numerically stable softmax of logits / tau.
RowVector softmax(const RowVector& logits, double tau = 1.0);

// W o for one final state.
RowVector project_logits(const LMParams& params, const RowVector& state);

// Probability-weighted mixture of embedding rows: p^T W.
RowVector expected_embedding(const LMParams& params, const RowVector& probs);

// Key/value cache for position-by-position evaluation. Every inference path
// (forward, forward_soft, decoding, lattice mixing) goes through step(), so
// hard and soft evaluations of the same inputs agree bitwise.
class DecoderCache {
 public:
  explicit DecoderCache(const LMParams& params);

  // Consumes one input embedding (token or expected embedding, without the
  // positional term) and returns the final-layer state at that position.
  RowVector step(const RowVector& input_embedding);
  RowVector step_token(TokenId id);

  size_t length() const { return length_; }
  const LMParams& params() const { return *params_; }

 private:
  const LMParams* params_;
  std::vector<Matrix> keys_;
  std::vector<Matrix> values_;
  size_t length_ = 0;
};

// Final-layer states and logits for a hard prefix.
struct ForwardResult {
  Matrix states;  // T x d
  Matrix logits;  // T x V
};

ForwardResult forward(const LMParams& params, const TokenSequence& prefix);

// States for a hard prefix followed by soft positions; each soft row is a
// V-dim distribution consumed as its expected embedding. Returns states for
// all positions (hard then soft).
Matrix forward_soft(const LMParams& params, const TokenSequence& prefix_hard,
                    const Matrix& soft_rows);

// Throws NumericError("numeric overflow") if any entry is non-finite.
void check_finite(const Matrix& m, std::string_view what);

}  // namespace pabst

#endif  // PABST_LM_HPP_
