#pragma once

#include "postopt/problem.hpp"

namespace postopt {

/// Straight segment theta(t) = start + t (end - start), t in [0, 1].
class ParameterLine {
 public:
  ParameterLine(ParameterVector start, ParameterVector end);

  [[nodiscard]] const ParameterVector& start() const { return start_; }
  [[nodiscard]] const ParameterVector& end() const { return end_; }
  /// end - start.
  [[nodiscard]] const Vector& direction() const { return direction_; }

  /// Exact at both endpoints; throws std::out_of_range for t outside [0, 1].
  [[nodiscard]] ParameterVector at(double t) const;

 private:
  ParameterVector start_;
  ParameterVector end_;
  Vector direction_;
};

inline ParameterVector theta_at(const ParameterLine& line, double t) { return line.at(t); }

/// Raised when H is singular or (under the strict policy) not positive definite.
class SensitivityError : public Error {
 public:
  SensitivityError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  [[nodiscard]] double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

enum class DefinitenessPolicy {
  kRequirePositive,  // nonpositive eigenvalue is an error
  kWarn,             // solve anyway and set the warning flag
};

/// D * direction at one point, D = -H^{-1} B.
struct SensitivityApply {
  Vector direction;
  Vector result;
  double hessian_min_eigenvalue = 0.0;
  /// max |lambda| / min |lambda| of H.
  double condition_estimate = 0.0;
  bool indefinite_warning = false;
};

/// Solves H result = -B direction with a dense symmetric factorization.
SensitivityApply post_optimality_apply(
    const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
    const Vector& direction, DefinitenessPolicy policy = DefinitenessPolicy::kRequirePositive);

/// Same operation from already-evaluated H and B.
SensitivityApply sensitivity_from_derivatives(
    const Matrix& hessian, const Matrix& mixed, const Vector& direction,
    DefinitenessPolicy policy = DefinitenessPolicy::kRequirePositive);

/// Full operator D = -H^{-1} B (d x p).
Matrix sensitivity_operator(const Problem& problem, const DecisionVector& m,
                            const ParameterVector& theta);

/// f(t, m) = -H(m, theta(t))^{-1} B(m, theta(t)) (end - start).
/// SensitivityError messages carry the offending t.
SensitivityApply ivp_rhs(const Problem& problem, const ParameterLine& line, double t,
                         const DecisionVector& m);

}  // namespace postopt
