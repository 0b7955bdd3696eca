#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "postopt/problem.hpp"

namespace postopt {

struct NewtonConfig {
  double grad_tol = 1e-10;
  int max_iters = 100;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;
  /// Extra full Newton steps taken after convergence, each kept only if it
  /// lowers |g|. Not counted in iterations or history.
  int polish_steps = 1;

  /// Throws std::invalid_argument unless 0 < armijo_c < 1 and
  /// 0 < backtrack_factor < 1 (and the counts are positive).
  void validate() const;
};

/// One accepted iteration, kept for line-search auditing.
struct NewtonStep {
  double objective_before = 0.0;
  double objective_after = 0.0;
  double step_length = 0.0;
  /// g^T p at the start of the step.
  double directional_derivative = 0.0;
  bool steepest_descent = false;
  /// Accepted by the gradient-based decrease estimate because the predicted
  /// decrease was below the objective's roundoff.
  bool approximate_armijo = false;
};

struct SolveResult {
  Vector minimizer;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  double hessian_min_eigenvalue = 0.0;
  std::string message;
  std::vector<NewtonStep> history;
};

/// Newton's method with Armijo backtracking on J. Where H is not positive
/// definite the step falls back to steepest descent. When the predicted
/// decrease is below roundoff in J, sufficient decrease is measured as
/// a/2 (g(m) + g(m + a p))^T p instead of by differencing J. Convergence means
/// |g| <= grad_tol (1 + |J|) with a positive definite Hessian; the converged
/// point is then polished (see NewtonConfig::polish_steps).
SolveResult newton_solve(const Problem& problem, const ParameterVector& theta,
                         const DecisionVector& m0, const NewtonConfig& config = {});

class NominalSolveError : public Error {
 public:
  using Error::Error;
};

/// newton_solve at the box's nominal parameters. Throws NominalSolveError
/// unless the result is a converged strict local minimizer.
SolveResult solve_nominal(const Problem& problem, const ParameterBox& box,
                          const DecisionVector& m0, const NewtonConfig& config = {});

struct BatchSolve {
  std::vector<SolveResult> results;
  int non_converged = 0;
  bool warm_start = true;
};

/// Re-solves the problem at every sample, in parallel over `workers`
/// threads. warm_start starts each solve from the nominal minimizer,
/// otherwise from cold_start. Per-sample failures are recorded, never thrown.
BatchSolve reference_distribution(const Problem& problem,
                                  std::span<const ParameterVector> samples,
                                  const DecisionVector& nominal_minimizer, bool warm_start,
                                  const DecisionVector& cold_start, const NewtonConfig& config,
                                  int workers = 1);

/// CSV with columns sample_index, theta_1..theta_p, m_1..m_d, converged,
/// iterations, grad_norm.
void write_batch_csv(std::ostream& out, std::span<const ParameterVector> samples,
                     const BatchSolve& batch);

}  // namespace postopt
