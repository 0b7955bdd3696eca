#include <doctest.h>

#include "postopt/problems.hpp"
#include "postopt/types.hpp"
#include "support.hpp"

using namespace postopt;

TEST_CASE("quadratic closed forms") {
  const QuadraticProblem q;
  const DecisionVector m{0.3};
  const ParameterVector t{0.1};
  CHECK(q.objective(m, t) == doctest::Approx(0.02));
  CHECK(q.gradient(m, t)[0] == doctest::Approx(0.2));
  CHECK(q.hessian(m, t)(0, 0) == 1.0);
  CHECK(q.mixed(m, t)(0, 0) == -1.0);
  CHECK(q.name() == "quadratic");
}

TEST_CASE("cubic illustration") {
  const CubicIllustrationProblem c;
  const ParameterVector t{0.3, 0.75};
  SUBCASE("gradient is the stated cubic") {
    for (double m : {0.1, 0.42, 0.6, 0.93}) {
      const double expected = (m - 0.3) * (m - 0.5) * (m - 0.75);
      CHECK(c.gradient(DecisionVector{m}, t)[0] == doctest::Approx(expected).epsilon(1e-14));
    }
  }
  SUBCASE("J is zero at the origin and both thetas are local minima") {
    CHECK(c.objective(DecisionVector{0.0}, t) == 0.0);
    CHECK(c.gradient(DecisionVector{0.3}, t)[0] == doctest::Approx(0.0));
    CHECK(c.gradient(DecisionVector{0.75}, t)[0] == doctest::Approx(0.0));
    CHECK(c.hessian(DecisionVector{0.3}, t)(0, 0) > 0.0);
    CHECK(c.hessian(DecisionVector{0.75}, t)(0, 0) > 0.0);
    CHECK(c.hessian(DecisionVector{0.5}, t)(0, 0) < 0.0);
  }
  SUBCASE("hessian at the minimizer is (t2 - t1)(t2 - 1/2)") {
    CHECK(c.hessian(DecisionVector{0.75}, t)(0, 0) == doctest::Approx(0.1125).epsilon(1e-14));
  }
  SUBCASE("basin hint") {
    const auto basin = c.basin_hint();
    REQUIRE(basin.has_value());
    CHECK(basin->lower[0] == 0.5);
    CHECK(basin->upper[0] == 1.0);
  }
  SUBCASE("box must keep theta_1 < 1/2 < theta_2") {
    CHECK_NOTHROW(CubicIllustrationProblem(
        ParameterBox(ParameterVector{0.3, 0.75}, Vector::Constant(2, 0.1))));
    CHECK_THROWS(CubicIllustrationProblem(
        ParameterBox(ParameterVector{0.45, 0.75}, Vector::Constant(2, 0.1))));
    CHECK_THROWS(CubicIllustrationProblem(
        ParameterBox(ParameterVector{0.3, 0.55}, Vector::Constant(2, 0.1))));
  }
}

TEST_CASE("logistic problem") {
  const Logistic1DProblem p;
  SUBCASE("J(0, theta) = theta_1 / 2 for every theta") {
    for (const auto& theta :
         box_sample(ParameterBox::relative(ParameterVector{1.0, 3.0, 0.1}, 0.4), 3, 100)) {
      CHECK(p.objective(DecisionVector{0.0}, theta) == theta[0] / 2.0);
    }
  }
  SUBCASE("gradient agrees with a direct transcription") {
    const ParameterVector t{1.2, 2.5, 0.08};
    for (double m : {-2.0, 0.0, 0.9, 5.0}) {
      CHECK(p.gradient(DecisionVector{m}, t)[0] ==
            doctest::Approx(testing::logistic_derivative(m, 1.2, 2.5, 0.08)).epsilon(1e-13));
    }
  }
  SUBCASE("stable for large |theta_2 m|") {
    const ParameterVector t{1.0, 3.0, 0.1};
    for (double m : {-400.0, 400.0}) {
      const DecisionVector x{m};
      CHECK(std::isfinite(p.objective(x, t)));
      CHECK(p.gradient(x, t).allFinite());
      CHECK(p.hessian(x, t).allFinite());
      CHECK(p.mixed(x, t).allFinite());
    }
  }
  SUBCASE("nominal minimizer by bisection") {
    const double m = testing::logistic_minimizer(1.0, 3.0, 0.1);
    CHECK(m == doctest::Approx(0.8955334912).epsilon(1e-9));
    CHECK(std::abs(p.gradient(DecisionVector{m}, ParameterVector{1.0, 3.0, 0.1})[0]) <= 1e-14);
  }
}
