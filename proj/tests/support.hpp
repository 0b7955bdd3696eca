#pragma once

// Independent reference computations shared by the unit tests.

#include <cmath>
#include <functional>
#include <stdexcept>

#include "postopt/problem.hpp"

namespace testing {

/// Root of f on [a, b] by bisection; f(a) and f(b) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  if (fa * f(b) > 0.0) throw std::invalid_argument("bisect: no sign change");
  for (int i = 0; i < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++i) {
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

/// J'(m) for theta_1 / (1 + exp(theta_2 m)) + theta_3 m^2, written out
/// directly rather than through the library.
inline double logistic_derivative(double m, double t1, double t2, double t3) {
  const double e = std::exp(t2 * m);
  return -t1 * t2 * e / ((1.0 + e) * (1.0 + e)) + 2.0 * t3 * m;
}

inline double logistic_minimizer(double t1, double t2, double t3) {
  return bisect([&](double m) { return logistic_derivative(m, t1, t2, t3); }, 0.0, 3.0);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

inline double rel_err(const postopt::Vector& a, const postopt::Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace testing
