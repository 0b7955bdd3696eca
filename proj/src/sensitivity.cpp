#include "postopt/sensitivity.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace postopt {

ParameterLine::ParameterLine(ParameterVector start, ParameterVector end)
    : start_(std::move(start)), end_(std::move(end)) {
  if (start_.size() != end_.size()) {
    throw std::invalid_argument("ParameterLine: endpoints differ in length");
  }
  direction_ = end_.values() - start_.values();
}

ParameterVector ParameterLine::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::out_of_range("ParameterLine: t = " + std::to_string(t) + " outside [0, 1]");
  }
  if (t == 1.0) return end_;
  return ParameterVector(start_.values() + t * direction_);
}

SensitivityApply sensitivity_from_derivatives(const Matrix& hessian, const Matrix& mixed,
                                              const Vector& direction,
                                              DefinitenessPolicy policy) {
  const Eigen::Index d = hessian.rows();
  if (hessian.cols() != d || mixed.rows() != d || mixed.cols() != direction.size()) {
    throw std::invalid_argument("post_optimality_apply: inconsistent H/B/direction shapes");
  }
  if (!hessian.allFinite() || !mixed.allFinite()) {
    throw SensitivityError("post_optimality_apply: non-finite H or B",
                           std::numeric_limits<double>::quiet_NaN());
  }

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian);
  if (eig.info() != Eigen::Success) {
    throw SensitivityError("post_optimality_apply: eigendecomposition of H failed",
                           std::numeric_limits<double>::quiet_NaN());
  }
  const Vector& lambda = eig.eigenvalues();
  const double min_eig = lambda.minCoeff();
  const double max_abs = lambda.cwiseAbs().maxCoeff();
  const double min_abs = lambda.cwiseAbs().minCoeff();

  SensitivityApply out;
  out.direction = direction;
  out.hessian_min_eigenvalue = min_eig;
  out.condition_estimate = min_abs > 0.0 ? max_abs / min_abs
                                         : std::numeric_limits<double>::infinity();

  if (max_abs == 0.0 || min_abs <= 1e-14 * max_abs) {
    std::ostringstream msg;
    msg << "post_optimality_apply: singular Hessian (min eigenvalue " << min_eig
        << ", condition " << out.condition_estimate << ")";
    throw SensitivityError(msg.str(), min_eig);
  }
  if (min_eig <= 0.0) {
    if (policy == DefinitenessPolicy::kRequirePositive) {
      std::ostringstream msg;
      msg << "post_optimality_apply: Hessian not positive definite (min eigenvalue " << min_eig
          << ")";
      throw SensitivityError(msg.str(), min_eig);
    }
    out.indefinite_warning = true;
  }

  const Vector rhs = -(mixed * direction);
  if (!out.indefinite_warning) {
    const Eigen::LLT<Matrix> llt(hessian);
    if (llt.info() == Eigen::Success) {
      out.result = llt.solve(rhs);
      return out;
    }
  }
  // symmetric-indefinite (or Cholesky breakdown) path: spectral solve
  const Matrix& v = eig.eigenvectors();
  out.result = v * ((v.transpose() * rhs).array() / lambda.array()).matrix();
  return out;
}

SensitivityApply post_optimality_apply(const Problem& problem, const DecisionVector& m,
                                       const ParameterVector& theta, const Vector& direction,
                                       DefinitenessPolicy policy) {
  if (direction.size() != problem.parameter_dim()) {
    throw std::invalid_argument("post_optimality_apply: direction has length " +
                                std::to_string(direction.size()) + ", expected " +
                                std::to_string(problem.parameter_dim()));
  }
  const auto [hessian, mixed] = problem.second_derivatives(m, theta);
  return sensitivity_from_derivatives(hessian, mixed, direction, policy);
}

Matrix sensitivity_operator(const Problem& problem, const DecisionVector& m,
                            const ParameterVector& theta) {
  const auto [hessian, mixed] = problem.second_derivatives(m, theta);
  Matrix d(hessian.rows(), mixed.cols());
  for (Eigen::Index k = 0; k < mixed.cols(); ++k) {
    d.col(k) = sensitivity_from_derivatives(hessian, mixed,
                                            Vector::Unit(mixed.cols(), k))
                   .result;
  }
  return d;
}

SensitivityApply ivp_rhs(const Problem& problem, const ParameterLine& line, double t,
                         const DecisionVector& m) {
  const ParameterVector theta = line.at(t);
  try {
    return post_optimality_apply(problem, m, theta, line.direction());
  } catch (const SensitivityError& e) {
    std::ostringstream msg;
    msg << e.what() << " at t = " << t;
    throw SensitivityError(msg.str(), e.min_eigenvalue());
  }
}

}  // namespace postopt
