#include "postopt/advdiff.hpp"

#include <cmath>

#include "postopt/random.hpp"

namespace postopt {

// ---- tridiagonal ------------------------------------------------------------

Vector Tridiagonal::apply(const Vector& x) const {
  const Eigen::Index n = size();
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += lower[i] * x[i - 1];
    if (i + 1 < n) s += upper[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

TridiagonalLU::TridiagonalLU(const Tridiagonal& a)
    : lower_(a.size()), pivots_(a.size()), upper_(a.upper) {
  const Eigen::Index n = a.size();
  const double scale = a.diag.cwiseAbs().maxCoeff();
  pivots_[0] = a.diag[0];
  lower_[0] = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    const double pivot = pivots_[i - 1];
    if (!std::isfinite(pivot) || std::abs(pivot) <= 1e-14 * scale) {
      throw EvaluationError("tridiagonal solve: vanishing pivot " + std::to_string(pivot) +
                            " at row " + std::to_string(i - 1) + " (diagonal scale " +
                            std::to_string(scale) + ")");
    }
    if (i == n) break;
    lower_[i] = a.lower[i] / pivot;
    pivots_[i] = a.diag[i] - lower_[i] * a.upper[i - 1];
  }
  pivot_ratio_ = pivots_.cwiseAbs().maxCoeff() / pivots_.cwiseAbs().minCoeff();
}

Vector TridiagonalLU::solve(const Vector& rhs) const {
  const Eigen::Index n = pivots_.size();
  Vector x = rhs;
  for (Eigen::Index i = 1; i < n; ++i) x[i] -= lower_[i] * x[i - 1];
  x[n - 1] /= pivots_[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = (x[i] - upper_[i] * x[i + 1]) / pivots_[i];
  return x;
}

// ---- model ------------------------------------------------------------------

AdvDiffModel::AdvDiffModel(int grid_cells) : cells_(grid_cells) {
  if (grid_cells < 16) {
    throw std::invalid_argument("AdvDiffModel: need at least 16 grid cells, got " +
                                std::to_string(grid_cells));
  }
}

Vector AdvDiffModel::nodes() const {
  return Vector::LinSpaced(num_nodes(), 0.0, 1.0);
}

Vector AdvDiffModel::quadrature_weights() const {
  Vector w = Vector::Constant(num_nodes(), spacing());
  w[0] *= 0.5;
  w[num_nodes() - 1] *= 0.5;
  return w;
}

Vector AdvDiffModel::source(const ParameterVector& theta) const {
  if (theta.size() != 3) throw std::invalid_argument("AdvDiffModel: theta must be (a, c, alpha)");
  const Vector x = nodes();
  return theta[0] * (-kSourceWidth * (x.array() - theta[1]).square()).exp();
}

void AdvDiffModel::validate(double kappa, double velocity, double alpha) const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw EvaluationError("AdvDiffModel: diffusion coefficient must be positive, got " +
                          std::to_string(kappa));
  }
  if (!std::isfinite(velocity) || !std::isfinite(alpha)) {
    throw EvaluationError("AdvDiffModel: non-finite velocity or heat-transfer coefficient");
  }
}

// Interior row i:  -kappa (u[i-1] - 2u[i] + u[i+1]) / dx^2 + v (u[i+1] - u[i-1]) / (2dx)
// Ghost node at x=0: u[-1] = u[1] - 2dx (alpha u[0] + flux_left) / kappa
// Ghost node at x=1: u[n+1] = u[n-1] + 2dx (flux_right - alpha u[n]) / kappa
Tridiagonal AdvDiffModel::assemble(double kappa, double velocity, double alpha) const {
  validate(kappa, velocity, alpha);
  const Eigen::Index n = num_nodes();
  const double dx = spacing();
  const double diff = kappa / (dx * dx);
  const double adv = velocity / (2.0 * dx);
  Tridiagonal a{Vector::Constant(n, -diff - adv), Vector::Constant(n, 2.0 * diff),
                Vector::Constant(n, -diff + adv)};
  a.lower[0] = 0.0;
  a.upper[n - 1] = 0.0;
  a.diag[0] = 2.0 * diff + 2.0 * alpha / dx + velocity * alpha / kappa;
  a.upper[0] = -2.0 * diff;
  a.diag[n - 1] = 2.0 * diff + 2.0 * alpha / dx - velocity * alpha / kappa;
  a.lower[n - 1] = -2.0 * diff;
  return a;
}

Tridiagonal AdvDiffModel::assemble_dkappa(double kappa, double velocity, double alpha) const {
  validate(kappa, velocity, alpha);
  const Eigen::Index n = num_nodes();
  const double dx = spacing();
  const double inv = 1.0 / (dx * dx);
  Tridiagonal a{Vector::Constant(n, -inv), Vector::Constant(n, 2.0 * inv),
                Vector::Constant(n, -inv)};
  a.lower[0] = 0.0;
  a.upper[n - 1] = 0.0;
  a.diag[0] = 2.0 * inv - velocity * alpha / (kappa * kappa);
  a.upper[0] = -2.0 * inv;
  a.diag[n - 1] = 2.0 * inv + velocity * alpha / (kappa * kappa);
  a.lower[n - 1] = -2.0 * inv;
  return a;
}

Tridiagonal AdvDiffModel::assemble_dvelocity(double kappa, double velocity, double alpha) const {
  validate(kappa, velocity, alpha);
  const Eigen::Index n = num_nodes();
  const double half = 1.0 / (2.0 * spacing());
  Tridiagonal a{Vector::Constant(n, -half), Vector::Zero(n), Vector::Constant(n, half)};
  a.lower[0] = 0.0;
  a.upper[0] = 0.0;
  a.upper[n - 1] = 0.0;
  a.lower[n - 1] = 0.0;
  a.diag[0] = alpha / kappa;
  a.diag[n - 1] = -alpha / kappa;
  return a;
}

Vector AdvDiffModel::solve_general(double kappa, double velocity, double alpha,
                                   const Vector& source_values, double flux_left,
                                   double flux_right) const {
  if (source_values.size() != num_nodes()) {
    throw std::invalid_argument("AdvDiffModel: source has wrong length");
  }
  const Tridiagonal a = assemble(kappa, velocity, alpha);
  const double dx = spacing();
  Vector rhs = source_values;
  rhs[0] -= 2.0 * flux_left / dx + velocity * flux_left / kappa;
  rhs[num_nodes() - 1] += 2.0 * flux_right / dx - velocity * flux_right / kappa;

  const TridiagonalLU lu(a);
  Vector u = lu.solve(rhs);
  const double residual = (a.apply(u) - rhs).cwiseAbs().maxCoeff();
  const double scale = rhs.cwiseAbs().maxCoeff();
  if (!u.allFinite() || residual > 1e-10 * std::max(scale, 1e-300)) {
    throw EvaluationError("AdvDiffModel: solve residual " + std::to_string(residual) +
                          " exceeds tolerance (pivot ratio " + std::to_string(lu.pivot_ratio()) +
                          ")");
  }
  return u;
}

Vector AdvDiffModel::solve(const DecisionVector& m, const ParameterVector& theta) const {
  if (m.size() != 2) throw std::invalid_argument("AdvDiffModel: m must be (kappa, v)");
  return solve_general(m[0], m[1], theta[2], source(theta), 0.0, 0.0);
}

// ---- observations -----------------------------------------------------------

Vector synthesize_observations(const AdvDiffModel& model, const DecisionVector& m_true,
                               const ParameterVector& theta_data, double noise_std,
                               std::uint64_t seed) {
  if (noise_std < 0.0) throw std::invalid_argument("synthesize_observations: negative noise");
  Vector u = model.solve(m_true, theta_data);
  if (noise_std > 0.0) {
    RandomStream stream(seed, 0);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += stream.normal(0.0, noise_std);
  }
  return u;
}

// ---- inverse problem --------------------------------------------------------

InverseProblemSettings::InverseProblemSettings() {
  basin.lower = Vector(2);
  basin.upper = Vector(2);
  basin.lower << 0.01, 0.0;
  basin.upper << 0.2, 1.0;
}

InverseProblem::InverseProblem(AdvDiffModel model, Vector observations, DecisionVector m_prior,
                               double beta, std::optional<Box> basin, double fd_step)
    : model_(std::move(model)),
      observations_(std::move(observations)),
      weights_(model_.quadrature_weights()),
      prior_(std::move(m_prior)),
      beta_(beta),
      basin_(std::move(basin)),
      fd_step_(fd_step) {
  if (observations_.size() != model_.num_nodes()) {
    throw std::invalid_argument("InverseProblem: observations do not match the grid");
  }
  if (prior_.size() != 2) throw std::invalid_argument("InverseProblem: prior must be 2D");
  if (!(beta_ > 0.0)) throw std::invalid_argument("InverseProblem: beta must be positive");
  if (!(fd_step_ > 0.0)) throw std::invalid_argument("InverseProblem: fd_step must be positive");
}

InverseProblem InverseProblem::from_settings(const InverseProblemSettings& s,
                                             const ParameterVector& theta_data) {
  AdvDiffModel model(s.grid_cells);
  Vector obs = synthesize_observations(model, s.m_true, theta_data, s.noise_std, s.noise_seed);
  return InverseProblem(std::move(model), std::move(obs), s.m_prior, s.beta, s.basin, s.fd_step);
}

double InverseProblem::objective(const DecisionVector& m, const ParameterVector& theta) const {
  const Vector r = model_.solve(m, theta) - observations_;
  return 0.5 * weights_.dot(r.cwiseAbs2()) +
         0.5 * beta_ * (m.values() - prior_.values()).squaredNorm();
}

std::pair<double, Vector> InverseProblem::objective_and_gradient(
    const DecisionVector& m, const ParameterVector& theta) const {
  if (m.size() != 2 || theta.size() != 3) {
    throw std::invalid_argument("InverseProblem: expected d=2, p=3");
  }
  const double kappa = m[0];
  const double velocity = m[1];
  const double alpha = theta[2];
  const Tridiagonal a = model_.assemble(kappa, velocity, alpha);
  const TridiagonalLU lu(a);
  const Vector u = lu.solve(model_.source(theta));
  const Vector r = u - observations_;
  const Vector wr = weights_.cwiseProduct(r);

  const Vector du_dkappa = lu.solve(-model_.assemble_dkappa(kappa, velocity, alpha).apply(u));
  const Vector du_dvelocity =
      lu.solve(-model_.assemble_dvelocity(kappa, velocity, alpha).apply(u));

  const Vector offset = m.values() - prior_.values();
  Vector g(2);
  g[0] = wr.dot(du_dkappa) + beta_ * offset[0];
  g[1] = wr.dot(du_dvelocity) + beta_ * offset[1];
  const double j = 0.5 * wr.dot(r) + 0.5 * beta_ * offset.squaredNorm();
  if (!std::isfinite(j) || !g.allFinite()) {
    throw EvaluationError("InverseProblem: non-finite objective or gradient");
  }
  return {j, g};
}

Vector InverseProblem::gradient(const DecisionVector& m, const ParameterVector& theta) const {
  return objective_and_gradient(m, theta).second;
}

std::pair<Matrix, Matrix> InverseProblem::second_derivatives(const DecisionVector& m,
                                                             const ParameterVector& theta) const {
  FdSecondDerivatives fd = fd_second_derivatives(*this, m, theta, fd_step_);
  return {std::move(fd.hessian), std::move(fd.mixed)};
}

Matrix InverseProblem::hessian(const DecisionVector& m, const ParameterVector& theta) const {
  return fd_hessian(*this, m, theta, fd_step_);
}

Matrix InverseProblem::mixed(const DecisionVector& m, const ParameterVector& theta) const {
  return fd_mixed(*this, m, theta, fd_step_);
}

}  // namespace postopt
