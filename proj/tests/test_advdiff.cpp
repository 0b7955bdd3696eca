#include <doctest.h>

#include <cmath>
#include <numbers>

#include "postopt/advdiff.hpp"
#include "postopt/newton.hpp"
#include "postopt/uq.hpp"

using namespace postopt;

namespace {

const ParameterVector kNominal{10.0, 0.05, 1.0};

// max-norm error of the discrete solution for u = cos(pi x)
double manufactured_error(int cells, double kappa, double v, double alpha) {
  const AdvDiffModel model(cells);
  const Vector x = model.nodes();
  const double pi = std::numbers::pi;
  const Vector s = (kappa * pi * pi * (pi * x.array()).cos() - v * pi * (pi * x.array()).sin());
  // kappa u'(0) - alpha u(0) = -alpha,  kappa u'(1) + alpha u(1) = -alpha
  const Vector u = model.solve_general(kappa, v, alpha, s, -alpha, -alpha);
  return (u.array() - (pi * x.array()).cos()).abs().maxCoeff();
}

}  // namespace

TEST_CASE("tridiagonal Thomas solve matches a dense solve") {
  const int n = 7;
  Tridiagonal a{Vector::LinSpaced(n, -1.0, -0.4), Vector::Constant(n, 4.0),
                Vector::LinSpaced(n, 0.3, 0.9)};
  a.lower[0] = 0.0;
  a.upper[n - 1] = 0.0;
  Matrix dense = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    dense(i, i) = a.diag[i];
    if (i > 0) dense(i, i - 1) = a.lower[i];
    if (i + 1 < n) dense(i, i + 1) = a.upper[i];
  }
  const Vector rhs = Vector::LinSpaced(n, 1.0, 2.0);
  const Vector x = TridiagonalLU(a).solve(rhs);
  CHECK((dense * x - rhs).norm() <= 1e-13);
  CHECK((a.apply(x) - rhs).norm() <= 1e-13);
}

TEST_CASE("singular tridiagonal system is reported") {
  Tridiagonal a{Vector::Zero(3), Vector::Zero(3), Vector::Zero(3)};
  CHECK_THROWS_AS(TridiagonalLU{a}, EvaluationError);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(AdvDiffModel(8), std::invalid_argument);
  const AdvDiffModel model(32);
  CHECK_THROWS_AS((void)model.solve(DecisionVector{-0.1, 0.4}, kNominal), EvaluationError);
  CHECK_THROWS_AS((void)model.solve(DecisionVector{0.0, 0.4}, kNominal), EvaluationError);
}

TEST_CASE("zero source gives the zero field") {
  const AdvDiffModel model(64);
  const Vector u = model.solve(DecisionVector{0.05, 0.4}, ParameterVector{0.0, 0.5, 1.0});
  CHECK(u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trapezoid weights integrate linear functions exactly") {
  const AdvDiffModel model(50);
  const Vector w = model.quadrature_weights();
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w.dot(model.nodes()) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("manufactured solution converges at second order") {
  std::vector<double> h;
  std::vector<double> err;
  for (int n : {32, 64, 128, 256}) {
    h.push_back(1.0 / n);
    err.push_back(manufactured_error(n, 0.05, 0.4, 1.0));
  }
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] < err[i - 1]);
  const auto slope = fit_loglog_slope(h, err);
  REQUIRE(slope.has_value());
  CHECK(*slope >= 1.8);
  CHECK(*slope <= 2.2);
}

TEST_CASE("the peak is carried downstream of the source") {
  const AdvDiffModel model(200);
  const Vector u = model.solve(DecisionVector{0.05, 0.4}, kNominal);
  Eigen::Index imax = 0;
  u.maxCoeff(&imax);
  CHECK(model.nodes()[imax] > 0.05);
  CHECK(u.minCoeff() > 0.0);
}

TEST_CASE("observations") {
  const AdvDiffModel model(200);
  const DecisionVector m{0.05, 0.4};
  SUBCASE("noiseless data is the forward solve") {
    CHECK(synthesize_observations(model, m, kNominal, 0.0, 1) == model.solve(m, kNominal));
  }
  SUBCASE("noisy data is reproducible for a fixed seed") {
    const Vector a = synthesize_observations(model, m, kNominal, 0.01, 42);
    const Vector b = synthesize_observations(model, m, kNominal, 0.01, 42);
    const Vector c = synthesize_observations(model, m, kNominal, 0.01, 43);
    CHECK(a == b);
    CHECK_FALSE(a == c);
  }
  CHECK_THROWS(synthesize_observations(model, m, kNominal, -1.0, 1));
}

TEST_CASE("objective and gradient") {
  SUBCASE("perfect fit at the prior") {
    InverseProblemSettings s;
    s.m_true = s.m_prior;
    const InverseProblem ip = InverseProblem::from_settings(s, kNominal);
    const auto [j, g] = ip.objective_and_gradient(s.m_prior, kNominal);
    CHECK(j == 0.0);
    CHECK(g.norm() == 0.0);
  }
  SUBCASE("nonnegative objective") {
    const InverseProblem ip = InverseProblem::from_settings(InverseProblemSettings{}, kNominal);
    for (int i = 0; i < 20; ++i) {
      const DecisionVector m(uniform_in(Vector::Constant(2, 0.01), Vector::Constant(2, 0.9), 5, i));
      CHECK(ip.objective(m, kNominal) >= 0.0);
    }
  }
  SUBCASE("objective_and_gradient agrees with the separate calls") {
    const InverseProblem ip = InverseProblem::from_settings(InverseProblemSettings{}, kNominal);
    const DecisionVector m{0.08, 0.25};
    const auto [j, g] = ip.objective_and_gradient(m, kNominal);
    CHECK(j == ip.objective(m, kNominal));
    CHECK(g == ip.gradient(m, kNominal));
  }
}

TEST_CASE("second derivatives") {
  const InverseProblem ip = InverseProblem::from_settings(InverseProblemSettings{}, kNominal);
  const DecisionVector m{0.05, 0.4};
  const auto [h, b] = ip.second_derivatives(m, kNominal);
  SUBCASE("source magnitude moves the fit") { CHECK(b.col(0).norm() > 0.0); }
  SUBCASE("regularizer adds beta I") {
    InverseProblemSettings s;
    s.beta += 0.5;
    const InverseProblem stiffer = InverseProblem::from_settings(s, kNominal);
    const Matrix h2 = stiffer.hessian(m, kNominal);
    CHECK(std::abs(h2(0, 0) - h(0, 0) - 0.5) <= 1e-6);
    CHECK(std::abs(h2(1, 1) - h(1, 1) - 0.5) <= 1e-6);
    CHECK(std::abs(h2(0, 1) - h(0, 1)) <= 1e-6);
  }
  SUBCASE("hessian and mixed agree with the combined call") {
    CHECK((ip.hessian(m, kNominal) - h).norm() <= 1e-12 * h.norm());
    CHECK((ip.mixed(m, kNominal) - b).norm() <= 1e-12 * b.norm());
  }
}

TEST_CASE("nominal inverse problem") {
  const InverseProblemSettings s;
  const InverseProblem ip = InverseProblem::from_settings(s, kNominal);
  const ParameterBox box = ParameterBox::relative(kNominal, 0.2);
  const SolveResult r = solve_nominal(ip, box, s.m_prior);
  REQUIRE(r.converged);

  SUBCASE("minimizer within 1e-3 relative of the data-generating parameters") {
    CHECK((r.minimizer - s.m_true.values()).norm() / s.m_true.values().norm() <= 1e-3);
  }
  SUBCASE("H is positive definite there") { CHECK(r.hessian_min_eigenvalue > 0.0); }
  SUBCASE("grid refinement around the minimizer finds nothing lower") {
    // dense lattice over a box around m-dagger, refined twice around the best node
    Vector center = s.m_true.values();
    Vector half(2);
    half << 0.01, 0.08;
    double best = ip.objective(DecisionVector(center), kNominal);
    for (int level = 0; level < 4; ++level) {
      Vector best_point = center;
      for (int i = -10; i <= 10; ++i) {
        for (int j = -10; j <= 10; ++j) {
          Vector x = center;
          x[0] += half[0] * i / 10.0;
          x[1] += half[1] * j / 10.0;
          const double v = ip.objective(DecisionVector(x), kNominal);
          if (v < best) {
            best = v;
            best_point = x;
          }
        }
      }
      center = best_point;
      half /= 5.0;
    }
    CHECK((center - r.minimizer).cwiseQuotient(r.minimizer).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(r.objective <= best + 1e-14);
  }
}

TEST_CASE("vanishing regularization recovers the true parameters") {
  InverseProblemSettings s;
  s.beta = 1e-8;
  const InverseProblem ip = InverseProblem::from_settings(s, kNominal);
  const SolveResult r = newton_solve(ip, kNominal, s.m_prior);
  REQUIRE(r.converged);
  CHECK((r.minimizer - s.m_true.values()).cwiseQuotient(s.m_true.values()).cwiseAbs().maxCoeff() <=
        1e-4);
}

TEST_CASE("heavy regularization pins the minimizer to the prior") {
  InverseProblemSettings s;
  s.beta = 1e3;
  const InverseProblem ip = InverseProblem::from_settings(s, kNominal);
  const SolveResult r = newton_solve(ip, kNominal, s.m_true);
  REQUIRE(r.converged);
  CHECK((r.minimizer - s.m_prior.values()).norm() <= 1e-3);
}
