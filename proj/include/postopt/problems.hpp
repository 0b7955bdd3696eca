#pragma once

#include <optional>

#include "postopt/problem.hpp"

namespace postopt {

/// J(m, theta) = (m - theta_1)^2 / 2. The minimizer is theta_1, so every
/// sensitivity quantity is constant.
class QuadraticProblem final : public Problem {
 public:
  explicit QuadraticProblem(std::optional<Box> basin = std::nullopt) : basin_(std::move(basin)) {}

  [[nodiscard]] std::string name() const override { return "quadratic"; }
  [[nodiscard]] int decision_dim() const override { return 1; }
  [[nodiscard]] int parameter_dim() const override { return 1; }
  [[nodiscard]] double objective(const DecisionVector& m,
                                 const ParameterVector& theta) const override;
  [[nodiscard]] Vector gradient(const DecisionVector& m,
                                const ParameterVector& theta) const override;
  [[nodiscard]] Matrix hessian(const DecisionVector& m,
                               const ParameterVector& theta) const override;
  [[nodiscard]] Matrix mixed(const DecisionVector& m, const ParameterVector& theta) const override;
  [[nodiscard]] std::optional<Box> basin_hint() const override { return basin_; }

 private:
  std::optional<Box> basin_;
};

/// Antiderivative of (m - theta_1)(m - 1/2)(m - theta_2), zero at m = 0.
/// For theta_1 < 1/2 < theta_2 the local minima sit at theta_1 and theta_2;
/// the default basin (0.5, 1.0) isolates the one at theta_2.
class CubicIllustrationProblem final : public Problem {
 public:
  static constexpr double kMiddleRoot = 0.5;

  CubicIllustrationProblem();
  /// Rejects any box that does not keep theta_1 < 1/2 < theta_2.
  explicit CubicIllustrationProblem(const ParameterBox& box);

  [[nodiscard]] std::string name() const override { return "cubic"; }
  [[nodiscard]] int decision_dim() const override { return 1; }
  [[nodiscard]] int parameter_dim() const override { return 2; }
  [[nodiscard]] double objective(const DecisionVector& m,
                                 const ParameterVector& theta) const override;
  [[nodiscard]] Vector gradient(const DecisionVector& m,
                                const ParameterVector& theta) const override;
  [[nodiscard]] Matrix hessian(const DecisionVector& m,
                               const ParameterVector& theta) const override;
  [[nodiscard]] Matrix mixed(const DecisionVector& m, const ParameterVector& theta) const override;
  [[nodiscard]] std::optional<Box> basin_hint() const override;
};

/// J(m, theta) = theta_1 / (1 + exp(theta_2 m)) + theta_3 m^2.
class Logistic1DProblem final : public Problem {
 public:
  explicit Logistic1DProblem(std::optional<Box> basin = std::nullopt) : basin_(std::move(basin)) {}

  [[nodiscard]] std::string name() const override { return "logistic1d"; }
  [[nodiscard]] int decision_dim() const override { return 1; }
  [[nodiscard]] int parameter_dim() const override { return 3; }
  [[nodiscard]] double objective(const DecisionVector& m,
                                 const ParameterVector& theta) const override;
  [[nodiscard]] Vector gradient(const DecisionVector& m,
                                const ParameterVector& theta) const override;
  [[nodiscard]] Matrix hessian(const DecisionVector& m,
                               const ParameterVector& theta) const override;
  [[nodiscard]] Matrix mixed(const DecisionVector& m, const ParameterVector& theta) const override;
  [[nodiscard]] std::optional<Box> basin_hint() const override { return basin_; }

 private:
  std::optional<Box> basin_;
};

}  // namespace postopt
