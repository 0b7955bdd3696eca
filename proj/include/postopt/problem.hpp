#pragma once

#include <optional>
#include <string>
#include <utility>

#include "postopt/types.hpp"

namespace postopt {

/// Raised when a problem cannot be evaluated at a point (e.g. the forward
/// solve inside the objective fails).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Parameterized objective J(m, theta) with derivative contract
///   gradient  g = dJ/dm        (d)
///   hessian   H = d2J/dm2      (d x d)
///   mixed     B = d2J/dm dtheta (d x p)
///
/// Evaluators are const and keep no mutable state, so one instance can be
/// shared by concurrent workers.
class Problem {
 public:
  virtual ~Problem() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual int decision_dim() const = 0;
  [[nodiscard]] virtual int parameter_dim() const = 0;

  [[nodiscard]] virtual double objective(const DecisionVector& m,
                                         const ParameterVector& theta) const = 0;
  [[nodiscard]] virtual Vector gradient(const DecisionVector& m,
                                        const ParameterVector& theta) const = 0;
  [[nodiscard]] virtual Matrix hessian(const DecisionVector& m,
                                       const ParameterVector& theta) const = 0;
  [[nodiscard]] virtual Matrix mixed(const DecisionVector& m,
                                     const ParameterVector& theta) const = 0;

  /// (H, B) together; problems that share work between the two override this.
  [[nodiscard]] virtual std::pair<Matrix, Matrix> second_derivatives(
      const DecisionVector& m, const ParameterVector& theta) const {
    return {hessian(m, theta), mixed(m, theta)};
  }

  /// Open region U0 in which the minimizer is assumed unique. Advisory only.
  [[nodiscard]] virtual std::optional<Box> basin_hint() const { return std::nullopt; }
};

struct DerivativeCheckReport {
  double max_rel_error_gradient = 0.0;
  double max_rel_error_hessian = 0.0;
  double max_rel_error_mixed = 0.0;
  double fd_step = 0.0;

  [[nodiscard]] double worst() const;
  [[nodiscard]] bool passes(double tolerance) const { return worst() <= tolerance; }
  /// Componentwise max, used to aggregate reports over several points.
  void merge(const DerivativeCheckReport& other);
};

/// Default relative FD step; the step for a coordinate x is fd_step * max(1, |x|).
inline constexpr double kDefaultFdStep = 1e-6;

/// Step used for coordinate value x.
[[nodiscard]] double fd_increment(double fd_step, double x);

/// Central-difference gradient of J in m.
Vector fd_gradient(const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
                   double fd_step = kDefaultFdStep);

/// Compares the problem's g, H, B against central differences of J (for g)
/// and of g (for H and B). Failures at perturbed points propagate as
/// EvaluationError.
DerivativeCheckReport check_derivatives(const Problem& problem, const DecisionVector& m,
                                        const ParameterVector& theta,
                                        double fd_step = kDefaultFdStep);

/// Relative discrepancy used by check_derivatives:
///   max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor)
[[nodiscard]] double relative_discrepancy(const Matrix& analytic, const Matrix& reference,
                                          double floor);

/// Second derivatives from central differences of an exact gradient.
/// H is symmetrized as (H + H^T) / 2.
struct FdSecondDerivatives {
  Matrix hessian;
  Matrix mixed;
  /// Max-norm gap between raw and symmetrized H.
  double asymmetry = 0.0;
};

/// Throws DegenerateStepError when the step is so small that every difference
/// cancels to zero.
FdSecondDerivatives fd_second_derivatives(const Problem& problem, const DecisionVector& m,
                                          const ParameterVector& theta,
                                          double fd_step = kDefaultFdStep);

/// Symmetrized H alone (d gradient pairs).
Matrix fd_hessian(const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
                  double fd_step = kDefaultFdStep);
/// B alone (p gradient pairs).
Matrix fd_mixed(const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
                double fd_step = kDefaultFdStep);

class DegenerateStepError : public Error {
 public:
  using Error::Error;
};

}  // namespace postopt
