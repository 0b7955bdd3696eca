#include <doctest.h>

#include <sstream>

#include "postopt/csv.hpp"
#include "postopt/marching.hpp"
#include "postopt/newton.hpp"
#include "postopt/problems.hpp"
#include "postopt/uq.hpp"
#include "support.hpp"

using namespace postopt;

namespace {

const ParameterVector kLogisticBar{1.0, 3.0, 0.1};

DecisionVector logistic_start() { return DecisionVector{testing::logistic_minimizer(1.0, 3.0, 0.1)}; }

}  // namespace

TEST_CASE("scheme and status names round-trip") {
  for (Scheme s : {Scheme::kForwardEuler, Scheme::kHeun, Scheme::kRK4}) {
    CHECK(parse_scheme(to_string(s)) == s);
  }
  CHECK(parse_scheme("euler") == Scheme::kForwardEuler);
  CHECK_THROWS((void)parse_scheme("leapfrog"));
  for (MarchStatus s :
       {MarchStatus::kCompleted, MarchStatus::kAbortedIndefinite, MarchStatus::kAbortedNonfinite}) {
    CHECK(parse_march_status(to_string(s)) == s);
  }
}

TEST_CASE("theta-tilde equal to theta-bar keeps the state fixed") {
  const Logistic1DProblem p;
  const ParameterLine line(kLogisticBar, kLogisticBar);
  const auto t = march(p, logistic_start(), line, {7, Scheme::kForwardEuler, true});
  REQUIRE(t.completed());
  for (const Vector& s : t.states) CHECK(s == logistic_start().values());
}

TEST_CASE("quadratic with one step lands on theta-tilde") {
  const QuadraticProblem q;
  const ParameterLine line(ParameterVector{1.0}, ParameterVector{1.37});
  const auto t = march(q, DecisionVector{1.0}, line, {1});
  CHECK(t.final_state()[0] == doctest::Approx(1.37).epsilon(1e-15));
}

TEST_CASE("trajectory bookkeeping") {
  const Logistic1DProblem p;
  const ParameterLine line(kLogisticBar, ParameterVector{1.3, 2.1, 0.13});
  const int n = 10;
  const auto t = march(p, logistic_start(), line, {n, Scheme::kForwardEuler, true});
  REQUIRE(t.completed());
  REQUIRE(t.times.size() == n + 1);
  REQUIRE(t.states.size() == n + 1);
  REQUIRE(t.rhs.size() == n);
  REQUIRE(t.min_eigenvalues.size() == n + 1);
  for (int k = 0; k <= n; ++k) CHECK(t.times[k] == static_cast<double>(k) / n);
  for (int k = 1; k <= n; ++k) CHECK(t.times[k] > t.times[k - 1]);
  for (const Vector& s : t.states) CHECK(s.allFinite());
  CHECK(t.steps_taken == n);
  // forward Euler: m_{k+1} = m_k + h f_k
  for (int k = 0; k < n; ++k) {
    CHECK(t.states[k + 1][0] == doctest::Approx(t.states[k][0] + t.rhs[k][0] / n).epsilon(1e-15));
  }
  const auto compact = march(p, logistic_start(), line, {n});
  CHECK(compact.states.size() == 2);
  CHECK(compact.rhs.empty());
  CHECK(compact.final_state() == t.final_state());
}

TEST_CASE("right-hand-side evaluations per scheme") {
  const Logistic1DProblem p;
  const ParameterLine line(kLogisticBar, ParameterVector{0.8, 3.5, 0.09});
  for (int n : {1, 3, 8}) {
    CHECK(march(p, logistic_start(), line, {n, Scheme::kForwardEuler}).rhs_evals == n);
    CHECK(march(p, logistic_start(), line, {n, Scheme::kHeun}).rhs_evals == 2 * n);
    CHECK(march(p, logistic_start(), line, {n, Scheme::kRK4}).rhs_evals == 4 * n);
  }
}

TEST_CASE("march is deterministic") {
  const Logistic1DProblem p;
  const ParameterLine line(kLogisticBar, ParameterVector{1.2, 2.6, 0.07});
  const auto a = march(p, logistic_start(), line, {13, Scheme::kRK4, true});
  const auto b = march(p, logistic_start(), line, {13, Scheme::kRK4, true});
  CHECK(a.states == b.states);
  CHECK(a.rhs == b.rhs);
}

TEST_CASE("initial state must be stationary") {
  const Logistic1DProblem p;
  const ParameterLine line(kLogisticBar, ParameterVector{1.2, 2.6, 0.07});
  CHECK_THROWS_AS(march(p, DecisionVector{0.5}, line, {4}), std::invalid_argument);
  CHECK_THROWS_AS(march(p, logistic_start(), line, {0}), std::invalid_argument);
}

TEST_CASE("logistic march against the Newton oracle") {
  const Logistic1DProblem p;
  const ParameterBox box = ParameterBox::relative(kLogisticBar, 0.4);
  for (const auto& theta : box_sample(box, 5, 20)) {
    const ParameterLine line(kLogisticBar, theta);
    const double oracle = testing::logistic_minimizer(theta[0], theta[1], theta[2]);
    const double e20 = std::abs(march(p, logistic_start(), line, {20}).final_state()[0] - oracle);
    const double e40 = std::abs(march(p, logistic_start(), line, {40}).final_state()[0] - oracle);
    CHECK(e20 <= 1e-2);
    if (e20 > 1e-12) CHECK(e40 < e20);
  }
}

TEST_CASE("march_error_vs_oracle") {
  SUBCASE("quadratic: exact for every N") {
    const QuadraticProblem q;
    const ParameterLine line(ParameterVector{1.0}, ParameterVector{0.65});
    const auto e = march_error_vs_oracle(q, DecisionVector{1.0}, line, {1, 2, 5, 17},
                                         DecisionVector{0.65});
    CHECK(e.failed == 0);
    for (const auto& pt : e.points) CHECK(pt.error <= 1e-14);
  }
  SUBCASE("cubic: exact because the minimizer is theta_2") {
    const CubicIllustrationProblem c;
    const ParameterLine line(ParameterVector{0.3, 0.75}, ParameterVector{0.35, 0.8});
    const auto e = march_error_vs_oracle(c, DecisionVector{0.75}, line, {1, 2, 4},
                                         DecisionVector{0.8});
    for (const auto& pt : e.points) CHECK(pt.error <= 1e-12);
  }
  SUBCASE("logistic: first order") {
    // (1.35, 2.0, 0.13) would be a poor pick: its error changes sign near N = 8
    const Logistic1DProblem p;
    const ParameterLine line(kLogisticBar, ParameterVector{1.3, 2.2, 0.12});
    const DecisionVector oracle{testing::logistic_minimizer(1.3, 2.2, 0.12)};
    const auto e =
        march_error_vs_oracle(p, logistic_start(), line, {1, 2, 4, 8, 16, 32}, oracle);
    std::vector<double> h;
    std::vector<double> err;
    for (const auto& pt : e.points) {
      h.push_back(pt.h);
      err.push_back(pt.error);
    }
    const auto slope = fit_loglog_slope(h, err);
    REQUIRE(slope.has_value());
    CHECK(*slope >= 0.8);
    CHECK(*slope <= 1.2);
  }
}

TEST_CASE("higher-order schemes converge faster") {
  const Logistic1DProblem p;
  const ParameterLine line(kLogisticBar, ParameterVector{1.3, 2.2, 0.12});
  const double oracle = testing::logistic_minimizer(1.3, 2.2, 0.12);
  auto err = [&](Scheme s, int n) {
    return std::abs(march(p, logistic_start(), line, {n, s}).final_state()[0] - oracle);
  };
  CHECK(err(Scheme::kHeun, 8) < err(Scheme::kForwardEuler, 8));
  CHECK(err(Scheme::kRK4, 8) < err(Scheme::kHeun, 8));
  CHECK(err(Scheme::kHeun, 4) / err(Scheme::kHeun, 8) > 3.0);  // ~4 for second order
}

TEST_CASE("a march through an indefinite region aborts") {
  // From the minimizer at theta_2 = 0.75, pushing theta_2 below 1/2 makes the
  // tracked minimum merge with the middle root.
  const CubicIllustrationProblem c;
  const ParameterLine line(ParameterVector{0.3, 0.75}, ParameterVector{0.3, 0.2});
  const auto t = march(c, DecisionVector{0.75}, line, {50, Scheme::kForwardEuler, true});
  CHECK(t.status == MarchStatus::kAbortedIndefinite);
  CHECK_FALSE(t.message.empty());
  CHECK(t.steps_taken < 50);
  CHECK(t.left_basin);
  REQUIRE_FALSE(t.min_eigenvalues.empty());
  CHECK(t.min_eigenvalues.back() <= 0.0);
}

TEST_CASE("trajectory CSV layout") {
  const Logistic1DProblem p;
  const ParameterLine line(kLogisticBar, ParameterVector{1.3, 2.2, 0.12});
  const auto t = march(p, logistic_start(), line, {3, Scheme::kForwardEuler, true});
  std::stringstream traj;
  write_trajectory_csv(traj, t);
  const auto table = csv::read_table(traj);
  CHECK(table.header == std::vector<std::string>{"t", "m_1", "min_eig"});
  CHECK(table.rows.size() == 4);
  std::stringstream sens;
  write_sensitivity_csv(sens, t);
  const auto st = csv::read_table(sens);
  CHECK(st.header == std::vector<std::string>{"step", "t", "f_norm", "f_1"});
  CHECK(st.rows.size() == 3);
  CHECK(csv::parse_real(st.rows[1][1]) == t.times[1]);
}
