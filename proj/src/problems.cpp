#include "postopt/problems.hpp"

#include <cmath>

namespace postopt {

namespace {

void require_dims(const Problem& p, const DecisionVector& m, const ParameterVector& theta) {
  if (m.size() != p.decision_dim() || theta.size() != p.parameter_dim()) {
    throw std::invalid_argument(p.name() + ": expected d=" + std::to_string(p.decision_dim()) +
                                ", p=" + std::to_string(p.parameter_dim()) + ", got d=" +
                                std::to_string(m.size()) + ", p=" + std::to_string(theta.size()));
  }
}

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

// 1 / (1 + exp(-x)) without overflow for large |x|.
double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---- quadratic --------------------------------------------------------------

double QuadraticProblem::objective(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double r = m[0] - theta[0];
  return 0.5 * r * r;
}

Vector QuadraticProblem::gradient(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  return Vector::Constant(1, m[0] - theta[0]);
}

Matrix QuadraticProblem::hessian(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  return scalar_matrix(1.0);
}

Matrix QuadraticProblem::mixed(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  return scalar_matrix(-1.0);
}

// ---- cubic illustration -----------------------------------------------------

CubicIllustrationProblem::CubicIllustrationProblem() = default;

CubicIllustrationProblem::CubicIllustrationProblem(const ParameterBox& box) {
  if (box.dimension() != 2) throw std::invalid_argument("cubic: parameter box must have p=2");
  if (!(box.upper(0) < kMiddleRoot && box.lower(1) > kMiddleRoot)) {
    throw std::invalid_argument("cubic: box must keep theta_1 < 0.5 < theta_2");
  }
}

double CubicIllustrationProblem::objective(const DecisionVector& m,
                                           const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  const double a = theta[0];
  const double b = theta[1];
  const double c = kMiddleRoot;
  // integral of x^3 - (a+b+c) x^2 + (ab+ac+bc) x - abc
  return x * (x * (x * (x / 4.0 - (a + b + c) / 3.0) + (a * b + a * c + b * c) / 2.0) - a * b * c);
}

Vector CubicIllustrationProblem::gradient(const DecisionVector& m,
                                          const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  return Vector::Constant(1, (x - theta[0]) * (x - kMiddleRoot) * (x - theta[1]));
}

Matrix CubicIllustrationProblem::hessian(const DecisionVector& m,
                                         const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  const double a = theta[0];
  const double b = theta[1];
  const double c = kMiddleRoot;
  return scalar_matrix((x - a) * (x - c) + (x - a) * (x - b) + (x - c) * (x - b));
}

Matrix CubicIllustrationProblem::mixed(const DecisionVector& m,
                                       const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  Matrix b(1, 2);
  b(0, 0) = -(x - kMiddleRoot) * (x - theta[1]);
  b(0, 1) = -(x - theta[0]) * (x - kMiddleRoot);
  return b;
}

std::optional<Box> CubicIllustrationProblem::basin_hint() const {
  return Box{Vector::Constant(1, 0.5), Vector::Constant(1, 1.0)};
}

// ---- 1D logistic ------------------------------------------------------------
//
// With s = logistic(theta_2 m):
//   J   = theta_1 (1 - s) + theta_3 m^2
//   g   = -theta_1 theta_2 s(1-s) + 2 theta_3 m
//   H   = -theta_1 theta_2^2 s(1-s)(1-2s) + 2 theta_3
//   B_1 = -theta_2 s(1-s)
//   B_2 = -theta_1 s(1-s) (1 + theta_2 m (1-2s))
//   B_3 = 2 m

double Logistic1DProblem::objective(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  return theta[0] * logistic(-theta[1] * x) + theta[2] * x * x;
}

Vector Logistic1DProblem::gradient(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  const double s = logistic(theta[1] * x);
  return Vector::Constant(1, -theta[0] * theta[1] * s * (1.0 - s) + 2.0 * theta[2] * x);
}

Matrix Logistic1DProblem::hessian(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  const double s = logistic(theta[1] * x);
  return scalar_matrix(-theta[0] * theta[1] * theta[1] * s * (1.0 - s) * (1.0 - 2.0 * s) +
                       2.0 * theta[2]);
}

Matrix Logistic1DProblem::mixed(const DecisionVector& m, const ParameterVector& theta) const {
  require_dims(*this, m, theta);
  const double x = m[0];
  const double s = logistic(theta[1] * x);
  const double w = s * (1.0 - s);
  Matrix b(1, 3);
  b(0, 0) = -theta[1] * w;
  b(0, 1) = -theta[0] * w * (1.0 + theta[1] * x * (1.0 - 2.0 * s));
  b(0, 2) = 2.0 * x;
  return b;
}

}  // namespace postopt
