#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "postopt/problem.hpp"

namespace postopt {

/// Tridiagonal matrix stored by diagonals; lower[0] and upper[n-1] are unused.
struct Tridiagonal {
  Vector lower;
  Vector diag;
  Vector upper;

  [[nodiscard]] Eigen::Index size() const { return diag.size(); }
  [[nodiscard]] Vector apply(const Vector& x) const;
};

/// LU factorization without pivoting (Thomas algorithm). Throws
/// EvaluationError on a vanishing pivot.
class TridiagonalLU {
 public:
  explicit TridiagonalLU(const Tridiagonal& a);
  [[nodiscard]] Vector solve(const Vector& rhs) const;
  /// max |u_ii| / min |u_ii| over the pivots.
  [[nodiscard]] double pivot_ratio() const { return pivot_ratio_; }

 private:
  Vector lower_;   // multipliers
  Vector pivots_;  // diagonal of U
  Vector upper_;
  double pivot_ratio_ = 1.0;
};

/// Steady 1D advection-diffusion on [0, 1]
///   -kappa u'' + v u' = s,   kappa u'(0) = alpha u(0),   kappa u'(1) = -alpha u(1)
/// with s(x) = a exp(-200 (x - c)^2), discretized by second-order central
/// differences on n uniform cells. Robin conditions are folded in through
/// ghost nodes. Decision m = (kappa, v); parameters theta = (a, c, alpha).
class AdvDiffModel {
 public:
  static constexpr double kSourceWidth = 200.0;

  explicit AdvDiffModel(int grid_cells = 200);

  [[nodiscard]] int grid_cells() const { return cells_; }
  [[nodiscard]] Eigen::Index num_nodes() const { return cells_ + 1; }
  [[nodiscard]] double spacing() const { return 1.0 / cells_; }
  [[nodiscard]] Vector nodes() const;
  /// Trapezoid weights on the nodes.
  [[nodiscard]] Vector quadrature_weights() const;

  [[nodiscard]] Vector source(const ParameterVector& theta) const;

  /// System matrix for given (kappa, v, alpha).
  [[nodiscard]] Tridiagonal assemble(double kappa, double velocity, double alpha) const;
  /// dA/dkappa and dA/dv, exact for the discrete stencil.
  [[nodiscard]] Tridiagonal assemble_dkappa(double kappa, double velocity, double alpha) const;
  [[nodiscard]] Tridiagonal assemble_dvelocity(double kappa, double velocity, double alpha) const;

  /// Nodal temperatures for decision m and parameters theta.
  [[nodiscard]] Vector solve(const DecisionVector& m, const ParameterVector& theta) const;

  /// General Robin problem
  ///   kappa u'(0) - alpha u(0) = flux_left,  kappa u'(1) + alpha u(1) = flux_right
  /// with nodal source values. Used for manufactured-solution tests.
  [[nodiscard]] Vector solve_general(double kappa, double velocity, double alpha,
                                     const Vector& source_values, double flux_left,
                                     double flux_right) const;

 private:
  void validate(double kappa, double velocity, double alpha) const;

  int cells_;
};

/// Settings for the regularized least-squares inverse problem.
struct InverseProblemSettings {
  int grid_cells = 200;
  double beta = 1e-3;
  DecisionVector m_true{0.05, 0.4};
  DecisionVector m_prior{0.06, 0.32};
  double noise_std = 0.0;
  std::uint64_t noise_seed = 0;
  double fd_step = kDefaultFdStep;
  Box basin{Vector::Constant(2, 0.0), Vector::Constant(2, 0.0)};

  InverseProblemSettings();
};

/// Observed field: the forward solve at (m_true, theta_data) plus iid
/// Gaussian noise per node.
Vector synthesize_observations(const AdvDiffModel& model, const DecisionVector& m_true,
                               const ParameterVector& theta_data, double noise_std,
                               std::uint64_t seed);

/// J(m, theta) = 1/2 int (u - u_obs)^2 dx + beta/2 |m - m_prior|^2,
/// the integral taken by the trapezoid rule on the solution grid.
///
/// The gradient is exact for the discrete objective (forward sensitivities).
/// H and B come from central differences of that gradient.
class InverseProblem final : public Problem {
 public:
  InverseProblem(AdvDiffModel model, Vector observations, DecisionVector m_prior, double beta,
                 std::optional<Box> basin = std::nullopt, double fd_step = kDefaultFdStep);

  /// Builds the model and synthesizes observations at theta_data.
  static InverseProblem from_settings(const InverseProblemSettings& settings,
                                      const ParameterVector& theta_data);

  [[nodiscard]] std::string name() const override { return "advdiff"; }
  [[nodiscard]] int decision_dim() const override { return 2; }
  [[nodiscard]] int parameter_dim() const override { return 3; }

  [[nodiscard]] double objective(const DecisionVector& m,
                                 const ParameterVector& theta) const override;
  [[nodiscard]] Vector gradient(const DecisionVector& m,
                                const ParameterVector& theta) const override;
  [[nodiscard]] Matrix hessian(const DecisionVector& m,
                               const ParameterVector& theta) const override;
  [[nodiscard]] Matrix mixed(const DecisionVector& m, const ParameterVector& theta) const override;
  [[nodiscard]] std::pair<Matrix, Matrix> second_derivatives(
      const DecisionVector& m, const ParameterVector& theta) const override;
  [[nodiscard]] std::optional<Box> basin_hint() const override { return basin_; }

  [[nodiscard]] std::pair<double, Vector> objective_and_gradient(
      const DecisionVector& m, const ParameterVector& theta) const;

  [[nodiscard]] const AdvDiffModel& model() const { return model_; }
  [[nodiscard]] const Vector& observations() const { return observations_; }
  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] const DecisionVector& prior() const { return prior_; }

 private:
  AdvDiffModel model_;
  Vector observations_;
  Vector weights_;
  DecisionVector prior_;
  double beta_;
  std::optional<Box> basin_;
  double fd_step_;
};

}  // namespace postopt
