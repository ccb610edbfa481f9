#include "pabst/consistency.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pabst/jsonl.hpp"
#include "pabst/retrieval.hpp"

namespace pabst {
namespace {

void check_dims(const ClassifierParams& cls, Eigen::Index response_cols,
                Eigen::Index attribute_cols) {
  const auto d = static_cast<Eigen::Index>(cls.dim());
  if (cls.M.rows() != d || cls.M.cols() != d || cls.b.size() != d || response_cols != d ||
      attribute_cols != d) {
    throw ValidationError("classifier dimension mismatch");
  }
}

// log(logistic(x)) = -softplus(-x).
double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Features {
  RowVector r;
  RowVector c;
  double label;
};

std::vector<Features> featurize(const LanguageModel& lm, const std::vector<EntailmentPair>& pairs) {
  std::vector<Features> out;
  out.reserve(pairs.size());
  for (const EntailmentPair& p : pairs) {
    out.push_back({pool(embed_tokens(lm, p.response)), attribute_embedding(lm, p.attribute),
                   p.entailed ? 1.0 : 0.0});
  }
  return out;
}

}  // namespace

ClassifierParams ClassifierParams::zeros(size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return {Matrix::Zero(n, n), Vector::Zero(n), Vector::Zero(n), 0.0};
}

ClassifierParams ClassifierParams::operator-() const { return {-M, -a, -b, -bias}; }

bool ClassifierParams::operator==(const ClassifierParams& o) const {
  return M == o.M && a == o.a && b == o.b && bias == o.bias;
}

void ClassifierParams::save(const std::string& path) const {
  std::string out = std::to_string(dim()) + "\n";
  char buf[40];
  auto emit = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g%c", v, sep);
    out += buf;
  };
  const auto d = static_cast<Eigen::Index>(dim());
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) emit(M(i, j), j + 1 == d ? '\n' : ' ');
  }
  for (Eigen::Index j = 0; j < d; ++j) emit(a(j), j + 1 == d ? '\n' : ' ');
  for (Eigen::Index j = 0; j < d; ++j) emit(b(j), j + 1 == d ? '\n' : ' ');
  emit(bias, '\n');
  write_file(path, out);
}

ClassifierParams ClassifierParams::load(const std::string& path) {
  std::istringstream in(read_file(path));
  size_t d = 0;
  if (!(in >> d) || d == 0) throw ValidationError(path + ": bad classifier header");
  ClassifierParams p = zeros(d);
  auto next = [&]() {
    std::string tok;
    if (!(in >> tok)) throw ValidationError(path + ": truncated classifier file");
    try {
      return std::stod(tok);
    } catch (const std::exception&) {
      throw ValidationError(path + ": bad number '" + tok + "'");
    }
  };
  for (Eigen::Index i = 0; i < p.M.size(); ++i) p.M.data()[i] = next();
  for (Eigen::Index i = 0; i < p.a.size(); ++i) p.a(i) = next();
  for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b(i) = next();
  p.bias = next();
  return p;
}

RowVector pool(const Matrix& states) {
  if (states.rows() == 0) throw ValidationError("pool needs at least one row");
  return states.colwise().mean();
}

double entail_logit(const ClassifierParams& cls, const RowVector& r, const RowVector& c) {
  check_dims(cls, r.size(), c.size());
  return r.dot(cls.M * c.transpose()) + r.dot(cls.a) + c.dot(cls.b) + cls.bias;
}

double entail_prob(const ClassifierParams& cls, const Matrix& response_states,
                   const RowVector& attribute_embedding) {
  return sigmoid(2.0 * entail_logit(cls, pool(response_states), attribute_embedding));
}

double log_entail_prob(const ClassifierParams& cls, const Matrix& response_states,
                       const RowVector& attribute_embedding) {
  return log_sigmoid(2.0 * entail_logit(cls, pool(response_states), attribute_embedding));
}

Matrix grad_log_entail(const ClassifierParams& cls, const Matrix& response_states,
                       const RowVector& attribute_embedding) {
  const double p = entail_prob(cls, response_states, attribute_embedding);
  const RowVector direction = (cls.M * attribute_embedding.transpose()).transpose() +
                              cls.a.transpose();
  const double scale = (1.0 - p) * 2.0 / static_cast<double>(response_states.rows());
  return (scale * direction).replicate(response_states.rows(), 1);
}

RowVector attribute_embedding(const LanguageModel& lm, const std::string& attribute) {
  return pool(embed_tokens(lm, attribute));
}

std::vector<EntailmentPair> read_entailment_pairs(const std::string& path) {
  std::vector<EntailmentPair> out;
  read_jsonl(path, [&out](const Json& obj, size_t) {
    EntailmentPair p{require_string(obj, "attribute"), require_string(obj, "response"), false};
    const std::string label = require_string(obj, "label");
    if (label == "entail") {
      p.entailed = true;
    } else if (label != "neutral") {
      throw ValidationError("label must be \"entail\" or \"neutral\"");
    }
    out.push_back(std::move(p));
  });
  return out;
}

ClassifierTrainResult train_classifier(const std::vector<EntailmentPair>& train,
                                       const std::vector<EntailmentPair>& heldout,
                                       const LanguageModel& lm, const TrainConfig& cfg) {
  bool has_pos = false;
  bool has_neg = false;
  for (const EntailmentPair& p : train) (p.entailed ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ValidationError("degenerate labels");
  cfg.validate();

  const size_t d = lm.params.shape.d_model;
  ClassifierTrainResult result{ClassifierParams::zeros(d), {}, 0.0};
  const std::vector<Features> feats = featurize(lm, train);
  const double n = static_cast<double>(feats.size());

  constexpr double kDecay = 0.99;
  constexpr double kEps = 1e-8;
  ClassifierParams& w = result.params;
  ClassifierParams moment = ClassifierParams::zeros(d);
  double decay_pow = 1.0;
  for (size_t step = 0; step < cfg.steps; ++step) {
    ClassifierParams g = ClassifierParams::zeros(d);
    double loss = 0.0;
    for (const Features& f : feats) {
      const double z2 = 2.0 * entail_logit(w, f.r, f.c);
      loss -= f.label * log_sigmoid(z2) + (1.0 - f.label) * log_sigmoid(-z2);
      const double dz = 2.0 * (sigmoid(z2) - f.label) / n;
      g.M.noalias() += dz * f.r.transpose() * f.c;
      g.a += dz * f.r.transpose();
      g.b += dz * f.c.transpose();
      g.bias += dz;
    }
    loss /= n;
    if (cfg.weight_decay > 0.0) {
      loss += 0.5 * cfg.weight_decay *
              (w.M.squaredNorm() + w.a.squaredNorm() + w.b.squaredNorm() + w.bias * w.bias);
      g.M += cfg.weight_decay * w.M;
      g.a += cfg.weight_decay * w.a;
      g.b += cfg.weight_decay * w.b;
      g.bias += cfg.weight_decay * w.bias;
    }
    if (!std::isfinite(loss)) {
      throw NumericError("diverged at step " + std::to_string(step) +
                         ": non-finite loss; try a smaller learning rate");
    }
    result.loss_curve.push_back(loss);
    const double norm = std::sqrt(g.M.squaredNorm() + g.a.squaredNorm() + g.b.squaredNorm() +
                                  g.bias * g.bias);
    const double clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
    const double warm =
        cfg.warmup_steps == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(step + 1) / static_cast<double>(cfg.warmup_steps));
    const double lr = cfg.learning_rate * warm;
    decay_pow *= kDecay;
    const double correction = 1.0 - decay_pow;
    auto update = [&](double* wv, double* mv, const double* gv, Eigen::Index count) {
      for (Eigen::Index i = 0; i < count; ++i) {
        const double gi = gv[i] * clip;
        mv[i] = kDecay * mv[i] + (1.0 - kDecay) * gi * gi;
        wv[i] -= lr * gi / (std::sqrt(mv[i] / correction) + kEps);
      }
    };
    update(w.M.data(), moment.M.data(), g.M.data(), w.M.size());
    update(w.a.data(), moment.a.data(), g.a.data(), w.a.size());
    update(w.b.data(), moment.b.data(), g.b.data(), w.b.size());
    update(&w.bias, &moment.bias, &g.bias, 1);
  }
  if (!heldout.empty()) result.heldout_accuracy = classifier_accuracy(w, lm, heldout);
  return result;
}

double classifier_accuracy(const ClassifierParams& cls, const LanguageModel& lm,
                           const std::vector<EntailmentPair>& pairs) {
  if (pairs.empty()) throw ValidationError("no pairs to score");
  size_t correct = 0;
  for (const Features& f : featurize(lm, pairs)) {
    const bool predicted = entail_logit(cls, f.r, f.c) > 0.0;
    correct += predicted == (f.label > 0.5) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

}  // namespace pabst
