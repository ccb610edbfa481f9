// Elementwise kernels shared by the inference and training paths.
#ifndef PABST_SRC_LM_OPS_HPP_
#define PABST_SRC_LM_OPS_HPP_

#include <cmath>

#include "pabst/common.hpp"

namespace pabst::ops {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

inline double gelu_grad(double x) {
  const double u = kGeluC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

// Layer norm of one row; writes the normalized (pre-gain) row to xhat if given.
inline RowVector layer_norm(const RowVector& x, const Vector& gain, const Vector& bias,
                            RowVector* xhat = nullptr, double* rstd_out = nullptr) {
  const double mean = x.mean();
  const RowVector centered = x.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(x.size());
  const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
  RowVector h = centered * rstd;
  if (xhat != nullptr) *xhat = h;
  if (rstd_out != nullptr) *rstd_out = rstd;
  return (h.array() * gain.transpose().array() + bias.transpose().array()).matrix();
}

}  // namespace pabst::ops

#endif  // PABST_SRC_LM_OPS_HPP_
