#include "pabst/lm.hpp"

#include <cstring>
#include <string>

#include "lm_ops.hpp"

namespace pabst {

void validate_sequence(const TokenSequence& ids, size_t vocab_size) {
  bool seen_eos = false;
  for (TokenId id : ids) {
    if (id >= vocab_size) {
      throw ValidationError("token id " + std::to_string(id) + " out of range");
    }
    if (seen_eos) throw ValidationError("tokens follow end-of-sequence");
    if (id == kEos) seen_eos = true;
  }
}

void ModelShape::validate() const {
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || vocab_size == 0 ||
      max_positions == 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ValidationError("d_model must be divisible by n_heads");
  }
  if (vocab_size < kNumReserved) {
    throw ValidationError("vocabulary smaller than the reserved token set");
  }
}

LMParams LMParams::zeros(const ModelShape& shape) {
  shape.validate();
  const Eigen::Index d = shape.d_model, V = shape.vocab_size, T = shape.max_positions;
  LMParams p;
  p.shape = shape;
  p.token_embedding = Matrix::Zero(V, d);
  p.position_embedding = Matrix::Zero(T, d);
  p.layers.resize(shape.n_layers);
  for (LayerParams& l : p.layers) {
    l.ln1_gain = Vector::Zero(d);
    l.ln1_bias = Vector::Zero(d);
    l.w_qkv = Matrix::Zero(d, 3 * d);
    l.b_qkv = Vector::Zero(3 * d);
    l.w_attn_out = Matrix::Zero(d, d);
    l.b_attn_out = Vector::Zero(d);
    l.ln2_gain = Vector::Zero(d);
    l.ln2_bias = Vector::Zero(d);
    l.w_fc = Matrix::Zero(d, 4 * d);
    l.b_fc = Vector::Zero(4 * d);
    l.w_proj = Matrix::Zero(4 * d, d);
    l.b_proj = Vector::Zero(d);
  }
  p.lnf_gain = Vector::Zero(d);
  p.lnf_bias = Vector::Zero(d);
  return p;
}

LMParams LMParams::random(const ModelShape& shape, uint64_t seed) {
  LMParams p = zeros(shape);
  Rng rng(seed);
  auto fill = [&rng](auto& m, double stddev) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * standard_normal(rng);
  };
  const double std_in = 0.08;
  const double std_res = std_in / std::sqrt(2.0 * shape.n_layers);
  fill(p.token_embedding, std_in);
  fill(p.position_embedding, 0.02);
  for (LayerParams& l : p.layers) {
    l.ln1_gain.setOnes();
    l.ln2_gain.setOnes();
    fill(l.w_qkv, std_in);
    fill(l.w_attn_out, std_res);
    fill(l.w_fc, std_in);
    fill(l.w_proj, std_res);
  }
  p.lnf_gain.setOnes();
  p.round_to_float();
  return p;
}

size_t LMParams::num_parameters() const {
  size_t n = 0;
  for_each_tensor([&n](std::string_view, std::span<const double> t) { n += t.size(); });
  return n;
}

bool LMParams::all_finite() const {
  bool ok = true;
  for_each_tensor([&ok](std::string_view, std::span<const double> t) {
    for (double v : t) ok = ok && std::isfinite(v);
  });
  return ok;
}

void LMParams::round_to_float() {
  for_each_tensor([](std::string_view, std::span<double> t) {
    for (double& v : t) v = static_cast<double>(static_cast<float>(v));
  });
}

uint64_t LMParams::fingerprint() const {
  uint64_t h = 1469598103934665603ULL;
  for_each_tensor([&h](std::string_view, std::span<const double> t) {
    for (double v : t) {
      const float f = static_cast<float>(v);
      unsigned char bytes[sizeof(float)];
      std::memcpy(bytes, &f, sizeof(float));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  });
  return h;
}

bool LMParams::operator==(const LMParams& other) const {
  if (!(shape == other.shape)) return false;
  std::vector<double> a, b;
  for_each_tensor([&a](std::string_view, std::span<const double> t) {
    a.insert(a.end(), t.begin(), t.end());
  });
  other.for_each_tensor([&b](std::string_view, std::span<const double> t) {
    b.insert(b.end(), t.begin(), t.end());
  });
  return a == b;
}

RowVector softmax(const RowVector& logits, double tau) {
  const RowVector scaled = logits / tau;
  const double m = scaled.maxCoeff();
  RowVector e = (scaled.array() - m).exp().matrix();
  return e / e.sum();
}

RowVector project_logits(const LMParams& params, const RowVector& state) {
  return state * params.token_embedding.transpose();
}

RowVector expected_embedding(const LMParams& params, const RowVector& probs) {
  return probs * params.token_embedding;
}

void check_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw NumericError("numeric overflow in " + std::string(what));
  }
}

DecoderCache::DecoderCache(const LMParams& params) : params_(&params) {
  const auto& s = params.shape;
  keys_.assign(s.n_layers, Matrix::Zero(s.max_positions, s.d_model));
  values_.assign(s.n_layers, Matrix::Zero(s.max_positions, s.d_model));
}

RowVector DecoderCache::step_token(TokenId id) {
  if (id >= params_->shape.vocab_size) throw ValidationError("token id out of range");
  return step(params_->token_embedding.row(id));
}

RowVector DecoderCache::step(const RowVector& input_embedding) {
  const LMParams& p = *params_;
  const auto& s = p.shape;
  if (length_ >= s.max_positions) {
    throw ValidationError("sequence exceeds the maximum position count");
  }
  const Eigen::Index d = s.d_model;
  const Eigen::Index hd = s.head_dim();
  const Eigen::Index pos = static_cast<Eigen::Index>(length_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  RowVector x = input_embedding + p.position_embedding.row(pos);
  for (size_t li = 0; li < p.layers.size(); ++li) {
    const LayerParams& l = p.layers[li];
    const RowVector a = ops::layer_norm(x, l.ln1_gain, l.ln1_bias);
    const RowVector qkv = a * l.w_qkv + l.b_qkv.transpose();
    keys_[li].row(pos) = qkv.segment(d, d);
    values_[li].row(pos) = qkv.segment(2 * d, d);
    RowVector y(d);
    for (uint32_t h = 0; h < s.n_heads; ++h) {
      const auto q = qkv.segment(h * hd, hd);
      const auto keys = keys_[li].block(0, h * hd, pos + 1, hd);
      const auto vals = values_[li].block(0, h * hd, pos + 1, hd);
      RowVector scores = (keys * q.transpose()).transpose() * scale;
      const double m = scores.maxCoeff();
      scores = (scores.array() - m).exp().matrix();
      scores /= scores.sum();
      y.segment(h * hd, hd) = scores * vals;
    }
    x += y * l.w_attn_out + l.b_attn_out.transpose();
    const RowVector b = ops::layer_norm(x, l.ln2_gain, l.ln2_bias);
    RowVector f = b * l.w_fc + l.b_fc.transpose();
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = ops::gelu(f[i]);
    x += f * l.w_proj + l.b_proj.transpose();
  }
  ++length_;
  return ops::layer_norm(x, p.lnf_gain, p.lnf_bias);
}

ForwardResult forward(const LMParams& params, const TokenSequence& prefix) {
  if (prefix.size() > params.shape.max_positions) {
    throw ValidationError("prefix longer than the maximum position count");
  }
  validate_sequence(prefix, params.shape.vocab_size);
  DecoderCache cache(params);
  ForwardResult r;
  r.states.resize(static_cast<Eigen::Index>(prefix.size()), params.shape.d_model);
  for (size_t i = 0; i < prefix.size(); ++i) {
    r.states.row(static_cast<Eigen::Index>(i)) = cache.step_token(prefix[i]);
  }
  r.logits = r.states * params.token_embedding.transpose();
  check_finite(r.states, "forward states");
  check_finite(r.logits, "forward logits");
  return r;
}

Matrix forward_soft(const LMParams& params, const TokenSequence& prefix_hard,
                    const Matrix& soft_rows) {
  const size_t total = prefix_hard.size() + static_cast<size_t>(soft_rows.rows());
  if (total > params.shape.max_positions) {
    throw ValidationError("prefix longer than the maximum position count");
  }
  if (soft_rows.rows() > 0 && soft_rows.cols() != params.shape.vocab_size) {
    throw ValidationError("soft rows must have vocabulary width");
  }
  for (Eigen::Index i = 0; i < soft_rows.rows(); ++i) {
    const double sum = soft_rows.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-6 || soft_rows.row(i).minCoeff() < 0.0) {
      throw ValidationError("soft row " + std::to_string(i) + " is not a distribution");
    }
  }
  validate_sequence(prefix_hard, params.shape.vocab_size);
  DecoderCache cache(params);
  Matrix states(static_cast<Eigen::Index>(total), params.shape.d_model);
  Eigen::Index row = 0;
  for (TokenId id : prefix_hard) states.row(row++) = cache.step_token(id);
  for (Eigen::Index i = 0; i < soft_rows.rows(); ++i) {
    states.row(row++) = cache.step(expected_embedding(params, soft_rows.row(i)));
  }
  check_finite(states, "soft forward states");
  return states;
}

}  // namespace pabst
