#include "postopt/marching.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "postopt/csv.hpp"

namespace postopt {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kForwardEuler:
      return "forward_euler";
    case Scheme::kHeun:
      return "heun";
    case Scheme::kRK4:
      return "rk4";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "forward_euler" || text == "euler") return Scheme::kForwardEuler;
  if (text == "heun") return Scheme::kHeun;
  if (text == "rk4") return Scheme::kRK4;
  throw std::invalid_argument("unknown scheme '" + std::string(text) +
                              "' (expected forward_euler, heun or rk4)");
}

int stages(Scheme scheme) {
  switch (scheme) {
    case Scheme::kForwardEuler:
      return 1;
    case Scheme::kHeun:
      return 2;
    case Scheme::kRK4:
      return 4;
  }
  return 1;
}

std::string_view to_string(MarchStatus status) {
  switch (status) {
    case MarchStatus::kCompleted:
      return "completed";
    case MarchStatus::kAbortedIndefinite:
      return "aborted_indefinite";
    case MarchStatus::kAbortedNonfinite:
      return "aborted_nonfinite";
  }
  return "unknown";
}

MarchStatus parse_march_status(std::string_view text) {
  if (text == "completed") return MarchStatus::kCompleted;
  if (text == "aborted_indefinite") return MarchStatus::kAbortedIndefinite;
  if (text == "aborted_nonfinite") return MarchStatus::kAbortedNonfinite;
  throw std::invalid_argument("unknown march status '" + std::string(text) + "'");
}

bool is_stationary(const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
                   double tolerance) {
  const double j = problem.objective(m, theta);
  return problem.gradient(m, theta).norm() <= tolerance * (1.0 + std::abs(j));
}

namespace {

// Thrown inside a step when a stage produces a non-finite vector.
struct NonfiniteStage {
  std::string what;
};

class Stepper {
 public:
  Stepper(const Problem& problem, const ParameterLine& line, Trajectory& out)
      : problem_(problem), line_(line), out_(out) {}

  // f(t, m); counts the evaluation. The first stage of each step also
  // reports the Hessian eigenvalue through `min_eig`.
  Vector rhs(double t, const Vector& m, double* min_eig = nullptr) {
    if (!m.allFinite()) throw NonfiniteStage{"non-finite stage state"};
    const SensitivityApply s = ivp_rhs(problem_, line_, t, DecisionVector(m));
    ++out_.rhs_evals;
    if (!s.result.allFinite()) throw NonfiniteStage{"non-finite right-hand side"};
    if (min_eig) *min_eig = s.hessian_min_eigenvalue;
    return s.result;
  }

 private:
  const Problem& problem_;
  const ParameterLine& line_;
  Trajectory& out_;
};

}  // namespace

Trajectory march(const Problem& problem, const DecisionVector& nominal_minimizer,
                 const ParameterLine& line, const MarchConfig& config) {
  if (config.num_steps < 1) throw std::invalid_argument("march: num_steps must be >= 1");
  if (nominal_minimizer.size() != problem.decision_dim()) {
    throw std::invalid_argument("march: initial state has wrong dimension");
  }
  if (!is_stationary(problem, nominal_minimizer, line.start())) {
    throw std::invalid_argument(
        "march: initial state is not a stationary point at the nominal parameters");
  }

  const int n_steps = config.num_steps;
  const double h = config.step_size();
  const auto basin = problem.basin_hint();

  Trajectory out;
  out.times.push_back(0.0);
  out.states.push_back(nominal_minimizer.values());

  Stepper stepper(problem, line, out);
  Vector m = nominal_minimizer.values();
  double t = 0.0;

  for (int n = 0; n < n_steps; ++n) {
    const double t_next = static_cast<double>(n + 1) / n_steps;
    const double t_mid = 0.5 * (t + t_next);
    double min_eig = std::numeric_limits<double>::quiet_NaN();
    Vector next;
    Vector f0;
    try {
      f0 = stepper.rhs(t, m, &min_eig);
      switch (config.scheme) {
        case Scheme::kForwardEuler:
          next = m + h * f0;
          break;
        case Scheme::kHeun: {
          const Vector f1 = stepper.rhs(t_next, m + h * f0);
          next = m + 0.5 * h * (f0 + f1);
          break;
        }
        case Scheme::kRK4: {
          const Vector k2 = stepper.rhs(t_mid, m + 0.5 * h * f0);
          const Vector k3 = stepper.rhs(t_mid, m + 0.5 * h * k2);
          const Vector k4 = stepper.rhs(t_next, m + h * k3);
          next = m + (h / 6.0) * (f0 + 2.0 * k2 + 2.0 * k3 + k4);
          break;
        }
      }
    } catch (const SensitivityError& e) {
      out.status = MarchStatus::kAbortedIndefinite;
      out.message = e.what();
      if (config.record_trajectory) out.min_eigenvalues.push_back(e.min_eigenvalue());
      break;
    } catch (const NonfiniteStage& e) {
      out.status = MarchStatus::kAbortedNonfinite;
      out.message = e.what + " at t = " + csv::format_real(t);
      break;
    } catch (const EvaluationError& e) {
      out.status = MarchStatus::kAbortedNonfinite;
      out.message = std::string(e.what()) + " at t = " + csv::format_real(t);
      break;
    }
    if (!next.allFinite()) {
      out.status = MarchStatus::kAbortedNonfinite;
      out.message = "non-finite state at t = " + csv::format_real(t_next);
      break;
    }

    if (config.record_trajectory) {
      out.rhs.push_back(f0);
      out.min_eigenvalues.push_back(min_eig);
    }
    m = std::move(next);
    t = t_next;
    ++out.steps_taken;
    if (basin && !basin->contains(m)) out.left_basin = true;
    if (config.record_trajectory) {
      out.times.push_back(t);
      out.states.push_back(m);
    }
  }

  if (!config.record_trajectory) {
    if (out.steps_taken > 0) {
      out.times.push_back(t);
      out.states.push_back(m);
    }
  } else if (out.completed()) {
    // diagnostic only: no rhs evaluation is charged for the final state
    try {
      const Matrix hess = problem.hessian(DecisionVector(m), line.end());
      out.min_eigenvalues.push_back(Eigen::SelfAdjointEigenSolver<Matrix>(hess, Eigen::EigenvaluesOnly)
                                        .eigenvalues()
                                        .minCoeff());
    } catch (const Error&) {
      out.min_eigenvalues.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

MarchErrors march_error_vs_oracle(const Problem& problem, const DecisionVector& nominal_minimizer,
                                  const ParameterLine& line, const std::vector<int>& step_counts,
                                  const DecisionVector& oracle_minimizer, Scheme scheme) {
  MarchErrors out;
  for (int n : step_counts) {
    MarchConfig config{n, scheme, false};
    const Trajectory traj = march(problem, nominal_minimizer, line, config);
    MarchErrorPoint point{n, config.step_size(), std::numeric_limits<double>::quiet_NaN()};
    if (traj.completed()) {
      point.error = (traj.final_state() - oracle_minimizer.values()).norm();
    } else {
      ++out.failed;
    }
    out.points.push_back(point);
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  if (trajectory.states.empty()) throw std::invalid_argument("write_trajectory_csv: empty");
  const Eigen::Index d = trajectory.states.front().size();
  std::vector<std::string> header{"t"};
  for (Eigen::Index k = 0; k < d; ++k) header.push_back("m_" + std::to_string(k + 1));
  header.emplace_back("min_eig");
  csv::write_row(out, header);
  for (std::size_t n = 0; n < trajectory.states.size(); ++n) {
    std::vector<std::string> row{csv::format_real(trajectory.times[n])};
    for (Eigen::Index k = 0; k < d; ++k) row.push_back(csv::format_real(trajectory.states[n][k]));
    row.push_back(csv::format_real(n < trajectory.min_eigenvalues.size()
                                       ? trajectory.min_eigenvalues[n]
                                       : std::numeric_limits<double>::quiet_NaN()));
    csv::write_row(out, row);
  }
}

void write_sensitivity_csv(std::ostream& out, const Trajectory& trajectory) {
  if (trajectory.states.empty()) throw std::invalid_argument("write_sensitivity_csv: empty");
  const Eigen::Index d = trajectory.states.front().size();
  std::vector<std::string> header{"step", "t", "f_norm"};
  for (Eigen::Index k = 0; k < d; ++k) header.push_back("f_" + std::to_string(k + 1));
  csv::write_row(out, header);
  for (std::size_t n = 0; n < trajectory.rhs.size(); ++n) {
    std::vector<std::string> row{std::to_string(n), csv::format_real(trajectory.times[n]),
                                 csv::format_real(trajectory.rhs[n].norm())};
    for (Eigen::Index k = 0; k < d; ++k) row.push_back(csv::format_real(trajectory.rhs[n][k]));
    csv::write_row(out, row);
  }
}

}  // namespace postopt
