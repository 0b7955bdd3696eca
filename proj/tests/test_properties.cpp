#include <doctest.h>

// Randomized invariants. Every draw comes from a fixed (seed, index) stream,
// so failures reproduce.

#include <memory>

#include "postopt/advdiff.hpp"
#include "postopt/marching.hpp"
#include "postopt/newton.hpp"
#include "postopt/problems.hpp"
#include "postopt/sensitivity.hpp"
#include "support.hpp"

using namespace postopt;

namespace {

constexpr std::uint64_t kSeed = 31337;

Vector lo(const ParameterBox& b) { return b.nominal().values() - b.half_widths(); }
Vector hi(const ParameterBox& b) { return b.nominal().values() + b.half_widths(); }

struct Case {
  std::shared_ptr<const Problem> problem;
  ParameterBox box;
  Vector m_lower;
  Vector m_upper;
  double tolerance;
};

std::vector<Case> cases() {
  const ParameterVector ad_nominal{10.0, 0.05, 1.0};
  InverseProblemSettings s;
  s.grid_cells = 64;
  return {
      {std::make_shared<QuadraticProblem>(), ParameterBox::relative(ParameterVector{1.0}, 0.4),
       Vector::Constant(1, -1.0), Vector::Constant(1, 3.0), 1e-7},
      {std::make_shared<CubicIllustrationProblem>(),
       ParameterBox(ParameterVector{0.3, 0.75}, Vector::Constant(2, 0.1)),
       Vector::Constant(1, 0.55), Vector::Constant(1, 1.0), 1e-6},
      {std::make_shared<Logistic1DProblem>(),
       ParameterBox::relative(ParameterVector{1.0, 3.0, 0.1}, 0.4), Vector::Constant(1, 0.2),
       Vector::Constant(1, 2.0), 1e-6},
      {std::make_shared<InverseProblem>(InverseProblem::from_settings(s, ad_nominal)),
       ParameterBox::relative(ad_nominal, 0.2), (Vector(2) << 0.02, 0.1).finished(),
       (Vector(2) << 0.15, 0.9).finished(), 1e-4},
  };
}

}  // namespace

TEST_CASE("analytic derivatives agree with finite differences at random points") {
  std::uint64_t stream = 0;
  for (const Case& c : cases()) {
    CAPTURE(c.problem->name());
    for (int i = 0; i < 20; ++i, stream += 2) {
      const DecisionVector m(uniform_in(c.m_lower, c.m_upper, kSeed, stream));
      const ParameterVector theta(
          uniform_in(lo(c.box), hi(c.box), kSeed, stream + 1));
      const auto report = check_derivatives(*c.problem, m, theta);
      CHECK(report.worst() <= c.tolerance);
    }
  }
}

TEST_CASE("finite-difference Hessians are nearly symmetric") {
  for (const Case& c : cases()) {
    CAPTURE(c.problem->name());
    for (int i = 0; i < 5; ++i) {
      const DecisionVector m(uniform_in(c.m_lower, c.m_upper, kSeed + 1, 2 * i));
      const ParameterVector theta(
          uniform_in(lo(c.box), hi(c.box), kSeed + 1, 2 * i + 1));
      const auto fd = fd_second_derivatives(*c.problem, m, theta);
      CHECK(fd.asymmetry <= 1e-6 * std::max(1.0, fd.hessian.cwiseAbs().maxCoeff()));
      CHECK((fd.hessian - fd.hessian.transpose()).norm() == 0.0);
    }
  }
}

TEST_CASE("objectives are nonnegative on their boxes") {
  for (const Case& c : cases()) {
    if (c.problem->name() == "cubic") continue;  // the cubic antiderivative changes sign
    CAPTURE(c.problem->name());
    for (int i = 0; i < 50; ++i) {
      const DecisionVector m(uniform_in(c.m_lower, c.m_upper, kSeed + 2, 2 * i));
      const ParameterVector theta(
          uniform_in(lo(c.box), hi(c.box), kSeed + 2, 2 * i + 1));
      CHECK(c.problem->objective(m, theta) >= 0.0);
    }
  }
}

TEST_CASE("quadratic: J(0, theta) = theta^2 / 2 and D = 1") {
  const QuadraticProblem q;
  for (int i = 0; i < 50; ++i) {
    const double th = uniform_in(Vector::Constant(1, -5.0), Vector::Constant(1, 5.0), kSeed + 3, i)[0];
    CHECK(q.objective(DecisionVector{0.0}, ParameterVector{th}) == doctest::Approx(0.5 * th * th));
    CHECK(sensitivity_operator(q, DecisionVector{th}, ParameterVector{th})(0, 0) == 1.0);
  }
}

TEST_CASE("cubic: D = [0, 1] at the tracked minimizer") {
  const CubicIllustrationProblem c;
  const ParameterBox box(ParameterVector{0.3, 0.75}, Vector::Constant(2, 0.1));
  for (int i = 0; i < 50; ++i) {
    const ParameterVector theta(uniform_in(lo(box), hi(box), kSeed + 4, i));
    const Matrix d = sensitivity_operator(c, DecisionVector{theta[1]}, theta);
    CHECK(std::abs(d(0, 0)) <= 1e-14);
    CHECK(std::abs(d(0, 1) - 1.0) <= 1e-14);
  }
}

TEST_CASE("sensitivity is linear in the direction") {
  const Logistic1DProblem p;
  const ParameterBox box = ParameterBox::relative(ParameterVector{1.0, 3.0, 0.1}, 0.4);
  for (int i = 0; i < 20; ++i) {
    const ParameterVector theta(uniform_in(lo(box), hi(box), kSeed + 5, 3 * i));
    const DecisionVector m{testing::logistic_minimizer(theta[0], theta[1], theta[2])};
    const Vector u = uniform_in(-Vector::Ones(3), Vector::Ones(3), kSeed + 5, 3 * i + 1);
    const Vector v = uniform_in(-Vector::Ones(3), Vector::Ones(3), kSeed + 5, 3 * i + 2);
    const double a = 0.7;
    const double b = -1.9;
    const Vector lhs = post_optimality_apply(p, m, theta, a * u + b * v).result;
    const Vector rhs = a * post_optimality_apply(p, m, theta, u).result +
                       b * post_optimality_apply(p, m, theta, v).result;
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("D matches finite differences of Newton minimizers") {
  // the same comparison the acceptance gate makes, here on a smaller grid
  for (const Case& c : cases()) {
    CAPTURE(c.problem->name());
    const DecisionVector start(0.5 * (c.m_lower + c.m_upper));
    const SolveResult nominal = solve_nominal(*c.problem, c.box, start);
    const DecisionVector m(nominal.minimizer);
    const Vector bar = c.box.nominal().values();
    const Matrix d = sensitivity_operator(*c.problem, m, c.box.nominal());
    for (int i = 0; i < 5; ++i) {
      Vector dir = uniform_in(-Vector::Ones(bar.size()), Vector::Ones(bar.size()), kSeed + 6, i);
      dir = dir.cwiseProduct(c.box.half_widths());
      const double delta = 1e-4;
      NewtonConfig tight;
      tight.grad_tol = 1e-13;
      const auto plus = newton_solve(*c.problem, ParameterVector(bar + delta * dir), m, tight);
      const auto minus = newton_solve(*c.problem, ParameterVector(bar - delta * dir), m, tight);
      const Vector fd = (plus.minimizer - minus.minimizer) / (2.0 * delta);
      CHECK(testing::rel_err(Vector(d * dir), fd) <= 1e-3);
    }
  }
}

TEST_CASE("one Euler step is the linear prediction") {
  const Logistic1DProblem p;
  const ParameterVector bar{1.0, 3.0, 0.1};
  const ParameterBox box = ParameterBox::relative(bar, 0.4);
  const DecisionVector m{testing::logistic_minimizer(1.0, 3.0, 0.1)};
  const Matrix d = sensitivity_operator(p, m, bar);
  for (int i = 0; i < 20; ++i) {
    const ParameterVector tilde(uniform_in(lo(box), hi(box), kSeed + 7, i));
    const auto t = march(p, m, ParameterLine(bar, tilde), {1});
    const Vector predicted = m.values() + d * (tilde.values() - bar.values());
    CHECK((t.final_state() - predicted).norm() <= 1e-13);
  }
}

TEST_CASE("marching along a line and back returns near the start") {
  const Logistic1DProblem p;
  const ParameterVector bar{1.0, 3.0, 0.1};
  const ParameterBox box = ParameterBox::relative(bar, 0.4);
  const DecisionVector m{testing::logistic_minimizer(1.0, 3.0, 0.1)};
  for (int i = 0; i < 10; ++i) {
    const ParameterVector tilde(uniform_in(lo(box), hi(box), kSeed + 8, i));
    const auto there = march(p, m, ParameterLine(bar, tilde), {64, Scheme::kRK4});
    REQUIRE(there.completed());
    // RK4 lands close enough to the minimizer at tilde to restart from it
    const auto polished = newton_solve(p, tilde, DecisionVector(there.final_state()));
    CHECK(std::abs(polished.minimizer[0] - there.final_state()[0]) <= 1e-8);
    const auto back =
        march(p, DecisionVector(polished.minimizer), ParameterLine(tilde, bar), {64, Scheme::kRK4});
    CHECK(std::abs(back.final_state()[0] - m[0]) <= 1e-8);
  }
}
