#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "postopt/marching.hpp"
#include "postopt/newton.hpp"

namespace postopt {

// ---- Monte Carlo study ------------------------------------------------------

struct StudyOptions {
  int num_samples = 5000;
  std::vector<int> step_counts{1, 2, 4, 8, 16};
  std::uint64_t seed = 0;
  bool with_oracle = true;
  Scheme scheme = Scheme::kForwardEuler;
  bool record_trajectories = false;
  /// Oracle solves start from the nominal minimizer when true.
  bool warm_start = true;
  NewtonConfig newton;
  int workers = 1;
};

struct SampleRecord {
  int index = 0;
  ParameterVector theta;
  /// One march per entry of step_counts, same order.
  std::vector<Trajectory> marches;
  std::optional<SolveResult> oracle;

  /// All marches completed and, when present, the oracle converged.
  [[nodiscard]] bool valid() const;
};

struct SampleStudy {
  std::string problem;
  std::vector<double> nominal_parameters;
  std::vector<double> half_widths;
  std::uint64_t seed = 0;
  std::vector<int> step_counts;
  Scheme scheme = Scheme::kForwardEuler;
  bool with_oracle = false;
  bool warm_start = true;
  Vector nominal_minimizer;
  std::vector<SampleRecord> samples;

  [[nodiscard]] int num_samples() const { return static_cast<int>(samples.size()); }
  [[nodiscard]] Eigen::Index decision_dim() const { return nominal_minimizer.size(); }
  [[nodiscard]] std::size_t step_index(int num_steps) const;
};

/// Failure tallies; every failed sample is counted once in failed_samples.
struct FailureCounts {
  int failed_samples = 0;
  int march_aborted_indefinite = 0;
  int march_aborted_nonfinite = 0;
  int oracle_not_converged = 0;
  int left_basin = 0;
};

FailureCounts count_failures(const SampleStudy& study);

/// Solves the nominal problem once, then for every sample marches with each
/// step count (and optionally re-solves with Newton). Samples are processed
/// in parallel; results are stored by sample index so the outcome does not
/// depend on the worker count. Throws NominalSolveError when the nominal
/// solve fails.
SampleStudy propagate_study(const Problem& problem, const ParameterBox& box,
                            const DecisionVector& initial_guess, const StudyOptions& options);

/// Same, starting from an already computed nominal solve.
SampleStudy propagate_study(const Problem& problem, const ParameterBox& box,
                            const SolveResult& nominal, const StudyOptions& options);

// ---- density estimation -----------------------------------------------------

struct GridAxis {
  double lower = 0.0;
  double upper = 1.0;
  int points = 256;

  [[nodiscard]] std::vector<double> values() const;
};

/// Gaussian kernel density on a grid. For dimension 2 density is stored
/// row-major with x as the slow index: density[i * y.size() + j].
struct DensityEstimate {
  int dimension = 1;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> density;
  std::vector<double> bandwidth;

  /// Trapezoid-rule integral over the grid.
  [[nodiscard]] double integral() const;
};

class DegenerateBandwidthError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kMinKdeSamples = 30;

/// Silverman's rule: 0.9 min(sd, IQR / 1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> values);

DensityEstimate kde_marginal(std::span<const double> values, const GridAxis& grid);
/// Product Gaussian kernel with per-axis bandwidth sd_k n^(-1/6).
DensityEstimate kde_joint(std::span<const double> xs, std::span<const double> ys,
                          const GridAxis& grid_x, const GridAxis& grid_y);

/// Coordinate k of each vector.
std::vector<double> coordinate(std::span<const Vector> values, Eigen::Index k);

/// Grid spanning [min - 3h, max + 3h] for the pooled values of several sets.
GridAxis covering_grid(std::span<const std::vector<double>> sets, int points);

// ---- convergence reports ----------------------------------------------------

enum class Statistic { kMean, kStdDev, kPerSampleError };
[[nodiscard]] std::string_view to_string(Statistic statistic);

struct ConvergenceReport {
  Statistic statistic = Statistic::kMean;
  std::vector<int> step_counts;
  /// errors[n][k]: error at step_counts[n] for coordinate k (one coordinate
  /// for kPerSampleError).
  std::vector<Vector> errors;
  /// Least-squares slope of log error against log h, per coordinate. Empty
  /// when fewer than three points sit above roundoff.
  std::vector<std::optional<double>> slopes;
  int valid_samples = 0;
  int excluded_samples = 0;
};

/// Least-squares slope of log(error) vs log(h) over the points whose error
/// is finite and above `floor`. nullopt with fewer than three such points.
std::optional<double> fit_loglog_slope(std::span<const double> h, std::span<const double> errors,
                                       double floor = 0.0);

/// Mean, StdDev and PerSampleError reports against the oracle results, over
/// the valid samples only. Requires an oracle study.
std::vector<ConvergenceReport> summary_errors(const SampleStudy& study);

struct SensitivityRow {
  int sample = 0;
  int step = 0;
  double t = 0.0;
  double norm = 0.0;
  Vector f;
};

/// Per-sample, per-step f(t_n, m_n) for the march with `num_steps`.
/// Requires a study run with record_trajectories.
std::vector<SensitivityRow> sensitivity_log(const SampleStudy& study, int num_steps);

// ---- serialization ----------------------------------------------------------

/// sample_index, theta_1..theta_p, then per N: N<N>_m_1..N<N>_m_d, N<N>_status,
/// then (oracle studies) oracle_m_1..oracle_m_d, oracle_converged.
void write_samples_csv(std::ostream& out, const SampleStudy& study);

/// Inverse of write_samples_csv. Restores the fields the statistics use;
/// trajectories come back as their final state only.
SampleStudy read_samples_csv(std::istream& in);

/// N, h, mean_err_1..d, std_err_1..d, per_sample_err.
void write_errors_csv(std::ostream& out, const std::vector<ConvergenceReport>& reports);

/// x, density  or  x, y, density.
void write_kde_csv(std::ostream& out, const DensityEstimate& estimate);

void write_sensitivity_log_csv(std::ostream& out, const std::vector<SensitivityRow>& rows);

}  // namespace postopt
