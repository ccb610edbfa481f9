#include "pabst/lm_train.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>

#include "lm_ops.hpp"

namespace pabst {
namespace {

struct LayerNormCache {
  Matrix xhat;
  Vector rstd;
};

Matrix layer_norm_rows(const Matrix& x, const Vector& gain, const Vector& bias,
                       LayerNormCache& cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  cache.xhat.resize(n, d);
  cache.rstd.resize(n);
  Matrix out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    RowVector xhat;
    double rstd = 0.0;
    out.row(i) = ops::layer_norm(x.row(i), gain, bias, &xhat, &rstd);
    cache.xhat.row(i) = xhat;
    cache.rstd[i] = rstd;
  }
  return out;
}

// Accumulates gain/bias gradients and returns the input gradient.
Matrix layer_norm_backward(const Matrix& dy, const Vector& gain, const LayerNormCache& cache,
                           Vector& dgain, Vector& dbias) {
  dgain += (dy.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
  dbias += dy.colwise().sum().transpose();
  const double d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const RowVector dxhat = (dy.row(i).array() * gain.transpose().array()).matrix();
    const double mean_dxhat = dxhat.sum() / d;
    const double mean_dxhat_xhat = dxhat.dot(cache.xhat.row(i)) / d;
    dx.row(i) = cache.rstd[i] *
                (dxhat.array() - mean_dxhat - cache.xhat.row(i).array() * mean_dxhat_xhat)
                    .matrix();
  }
  return dx;
}

struct LayerActivations {
  Matrix x_in;
  LayerNormCache ln1;
  Matrix a1;
  Matrix qkv;
  std::vector<Matrix> att;  // per head, n x n (causal)
  Matrix y;
  Matrix x_mid;
  LayerNormCache ln2;
  Matrix a2;
  Matrix fc_pre;
  Matrix fc_act;
};

struct SequenceActivations {
  TokenSequence inputs;
  std::vector<LayerActivations> layers;
  LayerNormCache lnf;
  Matrix states;
};

void forward_sequence(const LMParams& p, SequenceActivations& acts) {
  const auto& s = p.shape;
  const Eigen::Index n = static_cast<Eigen::Index>(acts.inputs.size());
  const Eigen::Index d = s.d_model, hd = s.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = p.token_embedding.row(acts.inputs[i]) + p.position_embedding.row(i);
  }
  acts.layers.resize(p.layers.size());
  for (size_t li = 0; li < p.layers.size(); ++li) {
    const LayerParams& l = p.layers[li];
    LayerActivations& a = acts.layers[li];
    a.x_in = x;
    a.a1 = layer_norm_rows(x, l.ln1_gain, l.ln1_bias, a.ln1);
    a.qkv = a.a1 * l.w_qkv;
    a.qkv.rowwise() += l.b_qkv.transpose();
    a.y.resize(n, d);
    a.att.resize(s.n_heads);
    for (uint32_t h = 0; h < s.n_heads; ++h) {
      const auto q = a.qkv.block(0, h * hd, n, hd);
      const auto k = a.qkv.block(0, d + h * hd, n, hd);
      const auto v = a.qkv.block(0, 2 * d + h * hd, n, hd);
      Matrix scores = (q * k.transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double m = scores.row(i).head(i + 1).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          const double e = j <= i ? std::exp(scores(i, j) - m) : 0.0;
          scores(i, j) = e;
          sum += e;
        }
        scores.row(i) /= sum;
      }
      a.y.block(0, h * hd, n, hd) = scores * v;
      a.att[h] = std::move(scores);
    }
    x = a.x_in + a.y * l.w_attn_out;
    x.rowwise() += l.b_attn_out.transpose();
    a.x_mid = x;
    a.a2 = layer_norm_rows(x, l.ln2_gain, l.ln2_bias, a.ln2);
    a.fc_pre = a.a2 * l.w_fc;
    a.fc_pre.rowwise() += l.b_fc.transpose();
    a.fc_act = a.fc_pre.unaryExpr([](double v) { return ops::gelu(v); });
    x = a.x_mid + a.fc_act * l.w_proj;
    x.rowwise() += l.b_proj.transpose();
  }
  acts.states = layer_norm_rows(x, p.lnf_gain, p.lnf_bias, acts.lnf);
}

void backward_sequence(const LMParams& p, const SequenceActivations& acts, const Matrix& d_states,
                       LMParams& g) {
  const auto& s = p.shape;
  const Eigen::Index n = static_cast<Eigen::Index>(acts.inputs.size());
  const Eigen::Index d = s.d_model, hd = s.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Matrix dx = layer_norm_backward(d_states, p.lnf_gain, acts.lnf, g.lnf_gain, g.lnf_bias);
  for (size_t li = p.layers.size(); li-- > 0;) {
    const LayerParams& l = p.layers[li];
    LayerParams& gl = g.layers[li];
    const LayerActivations& a = acts.layers[li];

    // Feed-forward block.
    gl.w_proj.noalias() += a.fc_act.transpose() * dx;
    gl.b_proj += dx.colwise().sum().transpose();
    Matrix dfc = dx * l.w_proj.transpose();
    for (Eigen::Index i = 0; i < dfc.size(); ++i) {
      dfc.data()[i] *= ops::gelu_grad(a.fc_pre.data()[i]);
    }
    gl.w_fc.noalias() += a.a2.transpose() * dfc;
    gl.b_fc += dfc.colwise().sum().transpose();
    const Matrix da2 = dfc * l.w_fc.transpose();
    Matrix dx_mid = dx + layer_norm_backward(da2, l.ln2_gain, a.ln2, gl.ln2_gain, gl.ln2_bias);

    // Attention block.
    gl.w_attn_out.noalias() += a.y.transpose() * dx_mid;
    gl.b_attn_out += dx_mid.colwise().sum().transpose();
    const Matrix dy = dx_mid * l.w_attn_out.transpose();
    Matrix dqkv = Matrix::Zero(n, 3 * d);
    for (uint32_t h = 0; h < s.n_heads; ++h) {
      const auto q = a.qkv.block(0, h * hd, n, hd);
      const auto k = a.qkv.block(0, d + h * hd, n, hd);
      const auto v = a.qkv.block(0, 2 * d + h * hd, n, hd);
      const Matrix& att = a.att[h];
      const auto dy_h = dy.block(0, h * hd, n, hd);
      dqkv.block(0, 2 * d + h * hd, n, hd) = att.transpose() * dy_h;
      const Matrix datt = dy_h * v.transpose();
      Matrix dscores(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dot = datt.row(i).dot(att.row(i));
        dscores.row(i) = (att.row(i).array() * (datt.row(i).array() - dot)).matrix();
      }
      dscores *= scale;
      dqkv.block(0, h * hd, n, hd) = dscores * k;
      dqkv.block(0, d + h * hd, n, hd) = dscores.transpose() * q;
    }
    gl.w_qkv.noalias() += a.a1.transpose() * dqkv;
    gl.b_qkv += dqkv.colwise().sum().transpose();
    const Matrix da1 = dqkv * l.w_qkv.transpose();
    dx = dx_mid + layer_norm_backward(da1, l.ln1_gain, a.ln1, gl.ln1_gain, gl.ln1_bias);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    g.token_embedding.row(acts.inputs[i]) += dx.row(i);
    g.position_embedding.row(i) += dx.row(i);
  }
}

std::vector<std::span<double>> tensor_spans(LMParams& p) {
  std::vector<std::span<double>> out;
  p.for_each_tensor([&out](std::string_view, std::span<double> t) { out.push_back(t); });
  return out;
}

void validate_example(const TrainExample& ex, const ModelShape& shape) {
  if (ex.context.empty()) throw ValidationError("training example has an empty context");
  if (ex.target.empty()) throw ValidationError("training example has an empty target");
  if (ex.context.size() + ex.target.size() - 1 > shape.max_positions) {
    throw ValidationError("training example exceeds the maximum position count");
  }
  for (TokenId id : ex.context) {
    if (id >= shape.vocab_size) throw ValidationError("token id out of range");
  }
  for (TokenId id : ex.target) {
    if (id >= shape.vocab_size) throw ValidationError("token id out of range");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0 || learning_rate <= 0.0 || clip_norm <= 0.0 || weight_decay < 0.0) {
    throw ValidationError("training configuration values must be positive");
  }
}

double loss_and_gradient(const LMParams& params, std::span<const TrainExample> batch,
                         LMParams* grad) {
  size_t total_targets = 0;
  for (const TrainExample& ex : batch) {
    validate_example(ex, params.shape);
    total_targets += ex.target.size();
  }
  if (total_targets == 0) throw ValidationError("empty training batch");
  if (grad != nullptr) *grad = LMParams::zeros(params.shape);
  const double inv_n = 1.0 / static_cast<double>(total_targets);

  double loss = 0.0;
  for (const TrainExample& ex : batch) {
    SequenceActivations acts;
    acts.inputs = ex.context;
    acts.inputs.insert(acts.inputs.end(), ex.target.begin(), ex.target.end() - 1);
    forward_sequence(params, acts);

    const Eigen::Index first = static_cast<Eigen::Index>(ex.context.size()) - 1;
    const Eigen::Index m = static_cast<Eigen::Index>(ex.target.size());
    const Matrix states = acts.states.middleRows(first, m);
    const Matrix logits = states * params.token_embedding.transpose();
    Matrix dlogits(m, logits.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
      const RowVector probs = softmax(logits.row(i));
      const TokenId y = ex.target[static_cast<size_t>(i)];
      loss -= std::log(std::max(probs[y], 1e-300)) * inv_n;
      dlogits.row(i) = probs * inv_n;
      dlogits(i, y) -= inv_n;
    }
    if (grad == nullptr) continue;
    grad->token_embedding.noalias() += dlogits.transpose() * states;
    Matrix d_states = Matrix::Zero(acts.states.rows(), acts.states.cols());
    d_states.middleRows(first, m) = dlogits * params.token_embedding;
    backward_sequence(params, acts, d_states, *grad);
  }
  if (!std::isfinite(loss)) {
    throw NumericError("diverged: non-finite loss; try a smaller learning rate");
  }
  return loss;
}

ExampleSource shuffled_source(const std::vector<TrainExample>& corpus, uint64_t seed) {
  if (corpus.empty()) throw ValidationError("empty training corpus");
  struct State {
    const std::vector<TrainExample>* corpus;
    Rng rng;
    std::vector<size_t> order;
    size_t cursor;
  };
  auto state = std::make_shared<State>(State{&corpus, Rng(seed), {}, corpus.size()});
  state->order.resize(corpus.size());
  std::iota(state->order.begin(), state->order.end(), 0);
  return [state]() {
    if (state->cursor == state->order.size()) {
      for (size_t i = state->order.size(); i > 1; --i) {
        std::swap(state->order[i - 1], state->order[uniform_index(state->rng, i)]);
      }
      state->cursor = 0;
    }
    return (*state->corpus)[state->order[state->cursor++]];
  };
}

TrainResult train_lm(const std::vector<TrainExample>& corpus, const LMParams& init,
                     const TrainConfig& cfg, const TrainObserver& observer) {
  cfg.validate();
  if (cfg.steps == 0) return {init, {}};
  if (corpus.empty()) throw ValidationError("empty training corpus");
  for (const TrainExample& ex : corpus) validate_example(ex, init.shape);
  return train_lm_stream(shuffled_source(corpus, cfg.seed), init, cfg, observer);
}

TrainResult train_lm_stream(const ExampleSource& source, const LMParams& init,
                            const TrainConfig& cfg, const TrainObserver& observer) {
  cfg.validate();
  TrainResult result{init, {}};
  if (cfg.steps == 0) return result;

  constexpr double kDecay = 0.99;
  constexpr double kEps = 1e-8;
  LMParams& params = result.params;
  LMParams second_moment = LMParams::zeros(init.shape);
  auto param_spans = tensor_spans(params);
  auto moment_spans = tensor_spans(second_moment);

  std::vector<TrainExample> batch;
  batch.reserve(cfg.batch_size);
  double decay_pow = 1.0;

  for (size_t step = 0; step < cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < cfg.batch_size) {
      batch.push_back(source());
      validate_example(batch.back(), init.shape);
    }
    LMParams grad;
    double loss = 0.0;
    try {
      loss = loss_and_gradient(params, batch, &grad);
    } catch (const NumericError&) {
      throw NumericError("diverged at step " + std::to_string(step) +
                         ": non-finite loss; try a smaller learning rate");
    }
    auto grad_spans = tensor_spans(grad);
    if (cfg.weight_decay > 0.0) {
      for (size_t t = 0; t < param_spans.size(); ++t) {
        for (size_t i = 0; i < param_spans[t].size(); ++i) {
          loss += 0.5 * cfg.weight_decay * param_spans[t][i] * param_spans[t][i];
          grad_spans[t][i] += cfg.weight_decay * param_spans[t][i];
        }
      }
    }
    result.loss_curve.push_back(loss);
    if (observer) observer(step, loss);

    double sq = 0.0;
    for (auto g : grad_spans) {
      for (double v : g) sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) {
      throw NumericError("diverged at step " + std::to_string(step) +
                         ": non-finite gradient; try a smaller learning rate");
    }
    const double clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
    const double warm =
        cfg.warmup_steps == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps));
    const double lr = cfg.learning_rate * warm;
    decay_pow *= kDecay;
    const double correction = 1.0 - decay_pow;
    for (size_t t = 0; t < param_spans.size(); ++t) {
      auto w = param_spans[t];
      auto m = moment_spans[t];
      auto g = grad_spans[t];
      for (size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i] * clip;
        m[i] = kDecay * m[i] + (1.0 - kDecay) * gi * gi;
        w[i] -= lr * gi / (std::sqrt(m[i] / correction) + kEps);
      }
    }
  }
  params.round_to_float();
  if (!params.all_finite()) {
    throw NumericError("diverged: non-finite parameters; try a smaller learning rate");
  }
  return result;
}

double target_perplexity(const LMParams& params, const std::vector<TrainExample>& corpus) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  double nll = 0.0;
  size_t tokens = 0;
  for (const TrainExample& ex : corpus) {
    const double mean = loss_and_gradient(params, std::span(&ex, 1), nullptr);
    nll += mean * static_cast<double>(ex.target.size());
    tokens += ex.target.size();
  }
  return std::exp(nll / static_cast<double>(tokens));
}

}  // namespace pabst
