#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "postopt/sensitivity.hpp"

namespace postopt {

enum class Scheme { kForwardEuler, kHeun, kRK4 };

[[nodiscard]] std::string_view to_string(Scheme scheme);
/// Accepts "forward_euler"/"euler", "heun", "rk4".
[[nodiscard]] Scheme parse_scheme(std::string_view text);
/// Right-hand-side evaluations per step.
[[nodiscard]] int stages(Scheme scheme);

struct MarchConfig {
  int num_steps = 1;
  Scheme scheme = Scheme::kForwardEuler;
  bool record_trajectory = false;

  [[nodiscard]] double step_size() const { return 1.0 / num_steps; }
};

enum class MarchStatus { kCompleted, kAbortedIndefinite, kAbortedNonfinite };

[[nodiscard]] std::string_view to_string(MarchStatus status);
[[nodiscard]] MarchStatus parse_march_status(std::string_view text);

/// Iterates of one march from theta-bar to theta-tilde.
///
/// With record_trajectory every step is kept: times[n] = n/N, states[n],
/// rhs[n] = f(t_n, m_n) and min_eigenvalues[n] (the last entry is evaluated
/// at the final state). Otherwise only the initial and final entries of
/// times/states are kept and rhs/min_eigenvalues stay empty.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> rhs;
  std::vector<double> min_eigenvalues;
  int rhs_evals = 0;
  int steps_taken = 0;
  MarchStatus status = MarchStatus::kCompleted;
  /// Some iterate left the problem's basin hint (marching continued).
  bool left_basin = false;
  std::string message;

  [[nodiscard]] const Vector& final_state() const { return states.back(); }
  [[nodiscard]] bool completed() const { return status == MarchStatus::kCompleted; }
};

/// Integrates dm/dt = f(t, m), m(0) = nominal_minimizer over t in [0, 1].
///
/// Throws std::invalid_argument if the initial state is not stationary at
/// line.start(): |g| <= 1e-8 (1 + |J|). Abnormal terminations are reported
/// through Trajectory::status, never thrown.
Trajectory march(const Problem& problem, const DecisionVector& nominal_minimizer,
                 const ParameterLine& line, const MarchConfig& config);

/// Stationarity test used as the march precondition.
[[nodiscard]] bool is_stationary(const Problem& problem, const DecisionVector& m,
                                 const ParameterVector& theta, double tolerance = 1e-8);

struct MarchErrorPoint {
  int num_steps = 0;
  double h = 0.0;
  /// |m_N - oracle|_2, NaN when the march failed.
  double error = 0.0;
};

struct MarchErrors {
  std::vector<MarchErrorPoint> points;
  int failed = 0;
};

MarchErrors march_error_vs_oracle(const Problem& problem, const DecisionVector& nominal_minimizer,
                                  const ParameterLine& line, const std::vector<int>& step_counts,
                                  const DecisionVector& oracle_minimizer,
                                  Scheme scheme = Scheme::kForwardEuler);

/// CSV with columns t, m_1..m_d, min_eig. Requires a recorded trajectory.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// CSV with columns step, t, f_norm, f_1..f_d.
void write_sensitivity_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace postopt
