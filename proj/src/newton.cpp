#include "postopt/newton.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "postopt/csv.hpp"
#include "postopt/parallel.hpp"

namespace postopt {

void NewtonConfig::validate() const {
  if (!(grad_tol > 0.0)) throw std::invalid_argument("newton: grad_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("newton: max_iters must be >= 1");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
    throw std::invalid_argument("newton: armijo_c must lie in (0, 1)");
  }
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw std::invalid_argument("newton: backtrack_factor must lie in (0, 1)");
  }
  if (max_backtracks < 1) throw std::invalid_argument("newton: max_backtracks must be >= 1");
  if (polish_steps < 0) throw std::invalid_argument("newton: polish_steps must be >= 0");
}

namespace {

constexpr double kResolvableDecrease = 1e3 * std::numeric_limits<double>::epsilon();

struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;
};

Spectrum spectrum(const Matrix& h) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  if (eig.info() != Eigen::Success) throw EvaluationError("newton: Hessian eigensolve failed");
  return {eig.eigenvalues(), eig.eigenvectors()};
}

Vector newton_direction(const Spectrum& spec, const Vector& g) {
  const Vector& lambda = spec.eigenvalues;
  const Matrix& v = spec.eigenvectors;
  return -(v * ((v.transpose() * g).array() / lambda.array()).matrix());
}

// Full Newton steps from a converged point, kept only while |g| drops and the
// point stays a converged strict minimizer. Failures just stop the polishing.
void polish(const Problem& problem, const ParameterVector& theta, Spectrum spec, Vector g,
            const NewtonConfig& config, SolveResult& out) {
  for (int k = 0; k < config.polish_steps && out.grad_norm > 0.0; ++k) {
    try {
      const Vector m = out.minimizer + newton_direction(spec, g);
      const DecisionVector dm(m);
      Vector g_new = problem.gradient(dm, theta);
      const double j_new = problem.objective(dm, theta);
      const double norm = g_new.norm();
      if (!(norm < out.grad_norm) || norm > config.grad_tol * (1.0 + std::abs(j_new))) return;
      Spectrum next = spectrum(problem.hessian(dm, theta));
      const double min_eig = next.eigenvalues.minCoeff();
      if (!(min_eig > 0.0)) return;
      out.minimizer = m;
      out.objective = j_new;
      out.grad_norm = norm;
      out.hessian_min_eigenvalue = min_eig;
      spec = std::move(next);
      g = std::move(g_new);
    } catch (const Error&) {
      return;
    }
  }
}

}  // namespace

SolveResult newton_solve(const Problem& problem, const ParameterVector& theta,
                         const DecisionVector& m0, const NewtonConfig& config) {
  config.validate();
  if (m0.size() != problem.decision_dim()) {
    throw std::invalid_argument("newton_solve: initial guess has wrong dimension");
  }

  SolveResult out;
  Vector m = m0.values();
  double j = 0.0;
  Vector g;
  try {
    j = problem.objective(m0, theta);
    g = problem.gradient(m0, theta);
  } catch (const EvaluationError& e) {
    out.minimizer = m;
    out.objective = std::numeric_limits<double>::quiet_NaN();
    out.grad_norm = std::numeric_limits<double>::quiet_NaN();
    out.message = std::string("evaluation failed at initial guess: ") + e.what();
    return out;
  }

  for (int iter = 0;; ++iter) {
    out.minimizer = m;
    out.objective = j;
    out.grad_norm = g.norm();
    out.iterations = iter;

    Spectrum spec;
    try {
      spec = spectrum(problem.hessian(DecisionVector(m), theta));
    } catch (const Error& e) {
      out.message = std::string("Hessian evaluation failed: ") + e.what();
      return out;
    }
    const double min_eig = spec.eigenvalues.minCoeff();
    out.hessian_min_eigenvalue = min_eig;

    const bool small_gradient = out.grad_norm <= config.grad_tol * (1.0 + std::abs(j));
    if (small_gradient && min_eig > 0.0) {
      out.converged = true;
      polish(problem, theta, std::move(spec), g, config, out);
      return out;
    }
    if (iter >= config.max_iters) {
      out.message = "maximum iterations reached";
      return out;
    }

    // search direction
    Vector p;
    bool steepest = false;
    if (min_eig > 0.0) {
      p = newton_direction(spec, g);
      if (!(g.dot(p) < 0.0)) {
        p = -g;
        steepest = true;
      }
    } else if (!small_gradient) {
      p = -g;
      steepest = true;
    } else {
      // stationary but not a minimizer: follow negative curvature
      p = spec.eigenvectors.col(0);
      if (g.dot(p) > 0.0) p = -p;
      steepest = true;
    }

    const double slope = g.dot(p);
    // Below this predicted decrease J differences are roundoff.
    const double resolvable = kResolvableDecrease * (1.0 + std::abs(j));
    double alpha = 1.0;
    bool accepted = false;
    bool approximate = false;
    double j_trial = j;
    Vector m_trial;
    Vector g_trial;
    for (int k = 0; k < config.max_backtracks; ++k, alpha *= config.backtrack_factor) {
      m_trial = m + alpha * p;
      if (!m_trial.allFinite()) continue;
      try {
        j_trial = problem.objective(DecisionVector(m_trial), theta);
      } catch (const EvaluationError&) {
        continue;
      }
      if (!std::isfinite(j_trial)) continue;
      if (j_trial <= j + config.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      if (alpha * std::abs(slope) <= resolvable) {
        // approximate Armijo: J(m + a p) - J(m) ~ a/2 (g + g_trial)^T p
        try {
          g_trial = problem.gradient(DecisionVector(m_trial), theta);
        } catch (const EvaluationError&) {
          continue;
        }
        if (0.5 * alpha * (g + g_trial).dot(p) <= config.armijo_c * alpha * slope) {
          accepted = true;
          approximate = true;
          break;
        }
        g_trial.resize(0);
      }
    }
    if (!accepted) {
      out.message = "line search failed after " + std::to_string(config.max_backtracks) +
                    " backtracks";
      return out;
    }

    out.history.push_back({j, j_trial, alpha, slope, steepest, approximate});
    m = std::move(m_trial);
    if (g_trial.size() == m.size()) {
      g = std::move(g_trial);
    } else {
      try {
        g = problem.gradient(DecisionVector(m), theta);
      } catch (const Error& e) {
        out.message = std::string("gradient evaluation failed: ") + e.what();
        return out;
      }
    }
    j = j_trial;
  }
}

SolveResult solve_nominal(const Problem& problem, const ParameterBox& box,
                          const DecisionVector& m0, const NewtonConfig& config) {
  SolveResult result = newton_solve(problem, box.nominal(), m0, config);
  if (!result.converged) {
    throw NominalSolveError("nominal solve did not converge: " + result.message);
  }
  if (!(result.hessian_min_eigenvalue > 0.0)) {
    throw NominalSolveError("nominal solve ended at a point that is not a strict local minimizer");
  }
  return result;
}

BatchSolve reference_distribution(const Problem& problem,
                                  std::span<const ParameterVector> samples,
                                  const DecisionVector& nominal_minimizer, bool warm_start,
                                  const DecisionVector& cold_start, const NewtonConfig& config,
                                  int workers) {
  config.validate();
  BatchSolve batch;
  batch.warm_start = warm_start;
  batch.results.resize(samples.size());
  const DecisionVector& start = warm_start ? nominal_minimizer : cold_start;
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    try {
      batch.results[i] = newton_solve(problem, samples[i], start, config);
    } catch (const std::exception& e) {
      SolveResult failed;
      failed.minimizer = Vector::Constant(problem.decision_dim(),
                                          std::numeric_limits<double>::quiet_NaN());
      failed.message = e.what();
      batch.results[i] = std::move(failed);
    }
  });
  for (const SolveResult& r : batch.results) {
    if (!r.converged) ++batch.non_converged;
  }
  return batch;
}

void write_batch_csv(std::ostream& out, std::span<const ParameterVector> samples,
                     const BatchSolve& batch) {
  if (samples.size() != batch.results.size()) {
    throw std::invalid_argument("write_batch_csv: sample/result count mismatch");
  }
  if (samples.empty()) throw std::invalid_argument("write_batch_csv: empty batch");
  const Eigen::Index p = samples.front().size();
  const Eigen::Index d = batch.results.front().minimizer.size();
  std::vector<std::string> header{"sample_index"};
  for (Eigen::Index k = 0; k < p; ++k) header.push_back("theta_" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < d; ++k) header.push_back("m_" + std::to_string(k + 1));
  header.insert(header.end(), {"converged", "iterations", "grad_norm"});
  csv::write_row(out, header);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SolveResult& r = batch.results[i];
    std::vector<std::string> row{std::to_string(i)};
    for (Eigen::Index k = 0; k < p; ++k) row.push_back(csv::format_real(samples[i][k]));
    for (Eigen::Index k = 0; k < d; ++k) row.push_back(csv::format_real(r.minimizer[k]));
    row.push_back(r.converged ? "1" : "0");
    row.push_back(std::to_string(r.iterations));
    row.push_back(csv::format_real(r.grad_norm));
    csv::write_row(out, row);
  }
}

}  // namespace postopt
