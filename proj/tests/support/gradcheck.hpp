// Central finite-difference oracles shared by the gradient tests.
#ifndef PABST_TESTS_GRADCHECK_HPP_
#define PABST_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>

namespace pabst::testing {

constexpr double kFdStep = 1e-5;
// Entries whose gradients are both below this magnitude are compared on an
// absolute scale; everything larger is compared relatively.
constexpr double kRelFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
  return std::abs(analytic - numeric) / scale;
}

// d f / d x at *x by central differences; restores *x afterwards.
inline double central_difference(double* x, const std::function<double()>& f,
                                 double h = kFdStep) {
  const double saved = *x;
  *x = saved + h;
  const double plus = f();
  *x = saved - h;
  const double minus = f();
  *x = saved;
  return (plus - minus) / (2.0 * h);
}

}  // namespace pabst::testing

#endif  // PABST_TESTS_GRADCHECK_HPP_
