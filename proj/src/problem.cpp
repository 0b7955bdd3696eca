#include "postopt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace postopt {

namespace {

// Gradient-scale floor for relative errors: entries far below this are
// compared in absolute terms.
constexpr double kRelativeFloor = 1e-8;

template <class Tag>
TaggedVector<Tag> shifted(const TaggedVector<Tag>& x, Eigen::Index k, double delta) {
  Vector v = x.values();
  v[k] += delta;
  return TaggedVector<Tag>(std::move(v));
}

}  // namespace

double DerivativeCheckReport::worst() const {
  return std::max({max_rel_error_gradient, max_rel_error_hessian, max_rel_error_mixed});
}

void DerivativeCheckReport::merge(const DerivativeCheckReport& other) {
  max_rel_error_gradient = std::max(max_rel_error_gradient, other.max_rel_error_gradient);
  max_rel_error_hessian = std::max(max_rel_error_hessian, other.max_rel_error_hessian);
  max_rel_error_mixed = std::max(max_rel_error_mixed, other.max_rel_error_mixed);
  fd_step = other.fd_step;
}

double fd_increment(double fd_step, double x) { return fd_step * std::max(1.0, std::abs(x)); }

double relative_discrepancy(const Matrix& analytic, const Matrix& reference, double floor) {
  if (analytic.rows() != reference.rows() || analytic.cols() != reference.cols()) {
    throw std::invalid_argument("relative_discrepancy: shape mismatch");
  }
  if (analytic.size() == 0) return 0.0;
  const double scale =
      std::max({analytic.cwiseAbs().maxCoeff(), reference.cwiseAbs().maxCoeff(), floor});
  const double err = (analytic - reference).cwiseAbs().maxCoeff();
  if (!std::isfinite(err)) return std::numeric_limits<double>::infinity();
  return err / scale;
}

Vector fd_gradient(const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
                   double fd_step) {
  Vector g(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double h = fd_increment(fd_step, m[i]);
    const double plus = problem.objective(shifted(m, i, h), theta);
    const double minus = problem.objective(shifted(m, i, -h), theta);
    g[i] = (plus - minus) / (2.0 * h);
  }
  return g;
}

namespace {

struct RawSecondDerivatives {
  Matrix hessian;
  Matrix mixed;
};

RawSecondDerivatives difference_gradient(const Problem& problem, const DecisionVector& m,
                                         const ParameterVector& theta, double fd_step,
                                         bool want_hessian = true, bool want_mixed = true) {
  const Eigen::Index d = m.size();
  const Eigen::Index p = theta.size();
  RawSecondDerivatives out{Matrix(want_hessian ? d : 0, d), Matrix(want_mixed ? d : 0, p)};
  for (Eigen::Index j = 0; want_hessian && j < d; ++j) {
    const double h = fd_increment(fd_step, m[j]);
    if (m[j] + h == m[j]) {
      throw DegenerateStepError("fd step " + std::to_string(h) +
                                " does not perturb decision coordinate " + std::to_string(j));
    }
    out.hessian.col(j) =
        (problem.gradient(shifted(m, j, h), theta) - problem.gradient(shifted(m, j, -h), theta)) /
        (2.0 * h);
  }
  for (Eigen::Index k = 0; want_mixed && k < p; ++k) {
    const double h = fd_increment(fd_step, theta[k]);
    if (theta[k] + h == theta[k]) {
      throw DegenerateStepError("fd step " + std::to_string(h) +
                                " does not perturb parameter coordinate " + std::to_string(k));
    }
    out.mixed.col(k) =
        (problem.gradient(m, shifted(theta, k, h)) - problem.gradient(m, shifted(theta, k, -h))) /
        (2.0 * h);
  }
  return out;
}

}  // namespace

DerivativeCheckReport check_derivatives(const Problem& problem, const DecisionVector& m,
                                        const ParameterVector& theta, double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("check_derivatives: fd_step must be positive");
  DerivativeCheckReport report;
  report.fd_step = fd_step;

  const Vector g = problem.gradient(m, theta);
  report.max_rel_error_gradient =
      relative_discrepancy(g, fd_gradient(problem, m, theta, fd_step), kRelativeFloor);

  const auto [hessian, mixed] = problem.second_derivatives(m, theta);
  const RawSecondDerivatives fd = difference_gradient(problem, m, theta, fd_step);
  report.max_rel_error_hessian = relative_discrepancy(hessian, fd.hessian, kRelativeFloor);
  report.max_rel_error_mixed = relative_discrepancy(mixed, fd.mixed, kRelativeFloor);
  return report;
}

FdSecondDerivatives fd_second_derivatives(const Problem& problem, const DecisionVector& m,
                                          const ParameterVector& theta, double fd_step) {
  if (!(fd_step > 0.0)) {
    throw std::invalid_argument("fd_second_derivatives: fd_step must be positive");
  }
  RawSecondDerivatives raw = difference_gradient(problem, m, theta, fd_step);
  if ((raw.hessian.array() == 0.0).all() && (raw.mixed.array() == 0.0).all()) {
    throw DegenerateStepError("fd_second_derivatives: differencing returned all zeros (step " +
                              std::to_string(fd_step) + ")");
  }
  FdSecondDerivatives out;
  out.hessian = 0.5 * (raw.hessian + raw.hessian.transpose());
  out.asymmetry = (out.hessian - raw.hessian).cwiseAbs().maxCoeff();
  out.mixed = std::move(raw.mixed);
  return out;
}

Matrix fd_hessian(const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
                  double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_hessian: fd_step must be positive");
  const RawSecondDerivatives raw = difference_gradient(problem, m, theta, fd_step, true, false);
  if ((raw.hessian.array() == 0.0).all()) {
    throw DegenerateStepError("fd_hessian: differencing returned all zeros (step " +
                              std::to_string(fd_step) + ")");
  }
  return 0.5 * (raw.hessian + raw.hessian.transpose());
}

Matrix fd_mixed(const Problem& problem, const DecisionVector& m, const ParameterVector& theta,
                double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_mixed: fd_step must be positive");
  return difference_gradient(problem, m, theta, fd_step, false, true).mixed;
}

}  // namespace postopt
