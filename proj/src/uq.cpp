#include "postopt/uq.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "postopt/csv.hpp"
#include "postopt/parallel.hpp"

namespace postopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();

}  // namespace

bool SampleRecord::valid() const {
  for (const Trajectory& t : marches) {
    if (!t.completed()) return false;
  }
  return !oracle || oracle->converged;
}

std::size_t SampleStudy::step_index(int num_steps) const {
  const auto it = std::find(step_counts.begin(), step_counts.end(), num_steps);
  if (it == step_counts.end()) {
    throw std::invalid_argument("study has no march with N = " + std::to_string(num_steps));
  }
  return static_cast<std::size_t>(it - step_counts.begin());
}

FailureCounts count_failures(const SampleStudy& study) {
  FailureCounts c;
  for (const SampleRecord& s : study.samples) {
    if (!s.valid()) ++c.failed_samples;
    bool left = false;
    for (const Trajectory& t : s.marches) {
      if (t.status == MarchStatus::kAbortedIndefinite) ++c.march_aborted_indefinite;
      if (t.status == MarchStatus::kAbortedNonfinite) ++c.march_aborted_nonfinite;
      left = left || t.left_basin;
    }
    if (left) ++c.left_basin;
    if (s.oracle && !s.oracle->converged) ++c.oracle_not_converged;
  }
  return c;
}

// ---- propagation ------------------------------------------------------------

SampleStudy propagate_study(const Problem& problem, const ParameterBox& box,
                            const DecisionVector& initial_guess, const StudyOptions& options) {
  const SolveResult nominal = solve_nominal(problem, box, initial_guess, options.newton);
  return propagate_study(problem, box, nominal, options);
}

SampleStudy propagate_study(const Problem& problem, const ParameterBox& box,
                            const SolveResult& nominal, const StudyOptions& options) {
  if (options.num_samples < 1) throw std::invalid_argument("study: num_samples must be >= 1");
  if (options.step_counts.empty()) throw std::invalid_argument("study: empty step list");
  for (int n : options.step_counts) {
    if (n < 1) throw std::invalid_argument("study: step counts must be >= 1");
  }
  if (!nominal.converged) throw NominalSolveError("study: nominal solve did not converge");
  if (box.dimension() != problem.parameter_dim()) {
    throw std::invalid_argument("study: box dimension does not match the problem");
  }

  SampleStudy study;
  study.problem = problem.name();
  study.nominal_parameters = box.nominal().to_std();
  study.half_widths = {box.half_widths().data(),
                       box.half_widths().data() + box.half_widths().size()};
  study.seed = options.seed;
  study.step_counts = options.step_counts;
  study.scheme = options.scheme;
  study.with_oracle = options.with_oracle;
  study.warm_start = options.warm_start;
  study.nominal_minimizer = nominal.minimizer;

  const DecisionVector start(nominal.minimizer);
  const std::vector<ParameterVector> thetas = box_sample(box, options.seed, options.num_samples);
  study.samples.resize(thetas.size());

  parallel_for(thetas.size(), options.workers, [&](std::size_t i) {
    SampleRecord& rec = study.samples[i];
    rec.index = static_cast<int>(i);
    rec.theta = thetas[i];
    const ParameterLine line(box.nominal(), thetas[i]);
    for (int n : options.step_counts) {
      rec.marches.push_back(
          march(problem, start, line, MarchConfig{n, options.scheme, options.record_trajectories}));
    }
    if (options.with_oracle) {
      rec.oracle = newton_solve(problem, thetas[i], start, options.newton);
    }
  });
  return study;
}

// ---- density estimation -----------------------------------------------------

std::vector<double> GridAxis::values() const {
  if (points < 2 || !(upper > lower)) throw std::invalid_argument("GridAxis: invalid grid");
  std::vector<double> v(static_cast<std::size_t>(points));
  const double step = (upper - lower) / (points - 1);
  for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = lower + i * step;
  v.back() = upper;
  return v;
}

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

double quantile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void require_kde_input(std::span<const double> values) {
  if (values.size() < static_cast<std::size_t>(kMinKdeSamples)) {
    throw std::invalid_argument("kde: need at least " + std::to_string(kMinKdeSamples) +
                                " samples, got " + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("kde: non-finite sample");
  }
}

// K[i, s] = phi((grid_i - sample_s) / h) / h
Matrix kernel_matrix(const std::vector<double>& grid, std::span<const double> samples, double h) {
  constexpr double kInvSqrt2Pi = 0.398942280401432677939946;
  Matrix k(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(samples.size()));
  for (Eigen::Index s = 0; s < k.cols(); ++s) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      const double z = (grid[static_cast<std::size_t>(i)] - samples[static_cast<std::size_t>(s)]) / h;
      k(i, s) = kInvSqrt2Pi * std::exp(-0.5 * z * z) / h;
    }
  }
  return k;
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
  require_kde_input(values);
  const double sd = moments(values).sd;
  const std::vector<double> copy(values.begin(), values.end());
  const double iqr = quantile(copy, 0.75) - quantile(copy, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  const double h = 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw DegenerateBandwidthError("kde: zero-variance sample set, bandwidth undefined");
  }
  return h;
}

double DensityEstimate::integral() const {
  if (dimension == 1) return trapezoid(x, density);
  std::vector<double> inner(x.size());
  std::vector<double> row(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::copy_n(density.begin() + static_cast<std::ptrdiff_t>(i * y.size()), y.size(), row.begin());
    inner[i] = trapezoid(y, row);
  }
  return trapezoid(x, inner);
}

DensityEstimate kde_marginal(std::span<const double> values, const GridAxis& grid) {
  const double h = silverman_bandwidth(values);
  DensityEstimate out;
  out.dimension = 1;
  out.x = grid.values();
  out.bandwidth = {h};
  const Matrix k = kernel_matrix(out.x, values, h);
  const Vector dens = k.rowwise().sum() / static_cast<double>(values.size());
  out.density.assign(dens.data(), dens.data() + dens.size());
  return out;
}

DensityEstimate kde_joint(std::span<const double> xs, std::span<const double> ys,
                          const GridAxis& grid_x, const GridAxis& grid_y) {
  if (xs.size() != ys.size()) throw std::invalid_argument("kde_joint: coordinate count mismatch");
  require_kde_input(xs);
  require_kde_input(ys);
  const double factor = std::pow(static_cast<double>(xs.size()), -1.0 / 6.0);
  const double hx = moments(xs).sd * factor;
  const double hy = moments(ys).sd * factor;
  if (!(hx > 0.0) || !(hy > 0.0)) {
    throw DegenerateBandwidthError("kde_joint: zero-variance coordinate, bandwidth undefined");
  }
  DensityEstimate out;
  out.dimension = 2;
  out.x = grid_x.values();
  out.y = grid_y.values();
  out.bandwidth = {hx, hy};
  const Matrix kx = kernel_matrix(out.x, xs, hx);
  const Matrix ky = kernel_matrix(out.y, ys, hy);
  // row-major with x slow == column-major of the (ny x nx) product
  const Matrix dens = (ky * kx.transpose()) / static_cast<double>(xs.size());
  out.density.assign(dens.data(), dens.data() + dens.size());
  return out;
}

std::vector<double> coordinate(std::span<const Vector> values, Eigen::Index k) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const Vector& v : values) out.push_back(v[k]);
  return out;
}

GridAxis covering_grid(std::span<const std::vector<double>> sets, int points) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double h = 0.0;
  for (const auto& s : sets) {
    if (s.empty()) continue;
    const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
    h = std::max(h, silverman_bandwidth(s));
  }
  if (!std::isfinite(lo)) throw std::invalid_argument("covering_grid: no samples");
  return {lo - 3.0 * h, hi + 3.0 * h, points};
}

// ---- convergence reports ----------------------------------------------------

std::string_view to_string(Statistic statistic) {
  switch (statistic) {
    case Statistic::kMean:
      return "mean";
    case Statistic::kStdDev:
      return "std";
    case Statistic::kPerSampleError:
      return "per_sample";
  }
  return "unknown";
}

std::optional<double> fit_loglog_slope(std::span<const double> h, std::span<const double> errors,
                                       double floor) {
  if (h.size() != errors.size()) throw std::invalid_argument("fit_loglog_slope: size mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (std::isfinite(errors[i]) && errors[i] > floor && errors[i] > 0.0 && h[i] > 0.0) {
      lx.push_back(std::log(h[i]));
      ly.push_back(std::log(errors[i]));
    }
  }
  if (lx.size() < 3) return std::nullopt;
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

std::vector<ConvergenceReport> summary_errors(const SampleStudy& study) {
  if (!study.with_oracle) throw std::invalid_argument("summary_errors: study has no oracle results");
  const Eigen::Index d = study.decision_dim();
  std::vector<const SampleRecord*> valid;
  for (const SampleRecord& s : study.samples) {
    if (s.valid() && s.oracle) valid.push_back(&s);
  }
  const int excluded = study.num_samples() - static_cast<int>(valid.size());
  const auto count = static_cast<double>(valid.size());

  auto mean_and_sd = [&](auto&& get) {
    Vector mean = Vector::Zero(d);
    for (const SampleRecord* s : valid) mean += get(*s);
    mean /= count;
    Vector ss = Vector::Zero(d);
    for (const SampleRecord* s : valid) ss += (get(*s) - mean).cwiseAbs2();
    Vector sd = count > 1 ? Vector((ss / (count - 1.0)).cwiseSqrt()) : Vector(Vector::Zero(d));
    return std::pair{mean, sd};
  };

  std::vector<ConvergenceReport> reports(3);
  const Statistic kinds[] = {Statistic::kMean, Statistic::kStdDev, Statistic::kPerSampleError};
  for (std::size_t r = 0; r < 3; ++r) {
    reports[r].statistic = kinds[r];
    reports[r].step_counts = study.step_counts;
    reports[r].valid_samples = static_cast<int>(valid.size());
    reports[r].excluded_samples = excluded;
  }
  if (valid.empty()) {
    for (auto& rep : reports) {
      const Eigen::Index width = rep.statistic == Statistic::kPerSampleError ? 1 : d;
      rep.errors.assign(study.step_counts.size(), Vector::Constant(width, kNaN));
      rep.slopes.assign(static_cast<std::size_t>(width), std::nullopt);
    }
    return reports;
  }

  const auto [oracle_mean, oracle_sd] =
      mean_and_sd([](const SampleRecord& s) -> const Vector& { return s.oracle->minimizer; });
  double oracle_scale = 0.0;
  for (const SampleRecord* s : valid) oracle_scale = std::max(oracle_scale, s->oracle->minimizer.norm());

  for (std::size_t n = 0; n < study.step_counts.size(); ++n) {
    const auto [mean, sd] = mean_and_sd(
        [n](const SampleRecord& s) -> const Vector& { return s.marches[n].final_state(); });
    reports[0].errors.push_back((mean - oracle_mean).cwiseAbs());
    reports[1].errors.push_back((sd - oracle_sd).cwiseAbs());
    double per_sample = 0.0;
    for (const SampleRecord* s : valid) {
      per_sample += (s->marches[n].final_state() - s->oracle->minimizer).norm();
    }
    reports[2].errors.push_back(Vector::Constant(1, per_sample / count));
  }

  std::vector<double> h;
  for (int n : study.step_counts) h.push_back(1.0 / n);
  for (std::size_t r = 0; r < 3; ++r) {
    ConvergenceReport& rep = reports[r];
    const Eigen::Index width = rep.errors.front().size();
    for (Eigen::Index k = 0; k < width; ++k) {
      std::vector<double> e;
      for (const Vector& v : rep.errors) e.push_back(v[k]);
      const double ref = r == 2 ? oracle_scale
                                : std::abs(r == 0 ? oracle_mean[k] : oracle_sd[k]);
      rep.slopes.push_back(fit_loglog_slope(h, e, kRoundoff * (1.0 + ref)));
    }
  }
  return reports;
}

std::vector<SensitivityRow> sensitivity_log(const SampleStudy& study, int num_steps) {
  const std::size_t n = study.step_index(num_steps);
  std::vector<SensitivityRow> rows;
  for (const SampleRecord& s : study.samples) {
    const Trajectory& t = s.marches[n];
    if (t.rhs.size() != static_cast<std::size_t>(t.steps_taken) || t.times.size() < t.rhs.size()) {
      throw std::invalid_argument("sensitivity_log: study was run without recorded trajectories");
    }
    for (std::size_t k = 0; k < t.rhs.size(); ++k) {
      rows.push_back({s.index, static_cast<int>(k), t.times[k], t.rhs[k].norm(), t.rhs[k]});
    }
  }
  return rows;
}

// ---- serialization ----------------------------------------------------------

void write_samples_csv(std::ostream& out, const SampleStudy& study) {
  if (study.samples.empty()) throw std::invalid_argument("write_samples_csv: empty study");
  const Eigen::Index p = study.samples.front().theta.size();
  const Eigen::Index d = study.decision_dim();
  std::vector<std::string> header{"sample_index"};
  for (Eigen::Index k = 0; k < p; ++k) header.push_back("theta_" + std::to_string(k + 1));
  for (int n : study.step_counts) {
    const std::string prefix = "N" + std::to_string(n) + "_";
    for (Eigen::Index k = 0; k < d; ++k) header.push_back(prefix + "m_" + std::to_string(k + 1));
    header.push_back(prefix + "status");
  }
  if (study.with_oracle) {
    for (Eigen::Index k = 0; k < d; ++k) header.push_back("oracle_m_" + std::to_string(k + 1));
    header.emplace_back("oracle_converged");
  }
  csv::write_row(out, header);

  std::vector<std::string> row;
  for (const SampleRecord& s : study.samples) {
    row.clear();
    row.push_back(std::to_string(s.index));
    for (Eigen::Index k = 0; k < p; ++k) row.push_back(csv::format_real(s.theta[k]));
    for (const Trajectory& t : s.marches) {
      for (Eigen::Index k = 0; k < d; ++k) row.push_back(csv::format_real(t.final_state()[k]));
      row.emplace_back(to_string(t.status));
    }
    if (study.with_oracle) {
      for (Eigen::Index k = 0; k < d; ++k) {
        row.push_back(csv::format_real(s.oracle ? s.oracle->minimizer[k] : kNaN));
      }
      row.push_back(s.oracle && s.oracle->converged ? "1" : "0");
    }
    csv::write_row(out, row);
  }
}

SampleStudy read_samples_csv(std::istream& in) {
  const csv::Table table = csv::read_table(in);
  SampleStudy study;
  std::vector<std::size_t> theta_cols;
  std::vector<std::size_t> oracle_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (name.rfind("theta_", 0) == 0) theta_cols.push_back(c);
    if (name.rfind("oracle_m_", 0) == 0) oracle_cols.push_back(c);
    if (name.size() > 8 && name[0] == 'N' && name.ends_with("_status")) {
      study.step_counts.push_back(
          static_cast<int>(csv::parse_integer(std::string_view(name).substr(1, name.size() - 8))));
    }
  }
  if (theta_cols.empty() || study.step_counts.empty()) {
    throw std::invalid_argument("read_samples_csv: not a samples table");
  }
  study.with_oracle = !oracle_cols.empty();
  const std::size_t first_n_col = table.column("N" + std::to_string(study.step_counts[0]) + "_m_1");
  const std::size_t status_col =
      table.column("N" + std::to_string(study.step_counts[0]) + "_status");
  const auto d = static_cast<Eigen::Index>(status_col - first_n_col);
  study.nominal_minimizer = Vector::Constant(d, kNaN);

  for (const auto& fields : table.rows) {
    SampleRecord rec;
    rec.index = static_cast<int>(csv::parse_integer(fields[table.column("sample_index")]));
    Vector theta(static_cast<Eigen::Index>(theta_cols.size()));
    for (std::size_t k = 0; k < theta_cols.size(); ++k) {
      theta[static_cast<Eigen::Index>(k)] = csv::parse_real(fields[theta_cols[k]]);
    }
    rec.theta = ParameterVector(std::move(theta));
    for (int n : study.step_counts) {
      const std::string prefix = "N" + std::to_string(n) + "_";
      Trajectory t;
      Vector state(d);
      for (Eigen::Index k = 0; k < d; ++k) {
        state[k] = csv::parse_real(fields[table.column(prefix + "m_" + std::to_string(k + 1))]);
      }
      t.states.push_back(std::move(state));
      t.times.push_back(kNaN);
      t.status = parse_march_status(fields[table.column(prefix + "status")]);
      rec.marches.push_back(std::move(t));
    }
    if (study.with_oracle) {
      SolveResult oracle;
      oracle.minimizer = Vector(d);
      for (Eigen::Index k = 0; k < d; ++k) {
        oracle.minimizer[k] = csv::parse_real(fields[oracle_cols[static_cast<std::size_t>(k)]]);
      }
      oracle.converged = fields[table.column("oracle_converged")] == "1";
      rec.oracle = std::move(oracle);
    }
    study.samples.push_back(std::move(rec));
  }
  return study;
}

void write_errors_csv(std::ostream& out, const std::vector<ConvergenceReport>& reports) {
  const ConvergenceReport* mean = nullptr;
  const ConvergenceReport* sd = nullptr;
  const ConvergenceReport* per = nullptr;
  for (const auto& r : reports) {
    if (r.statistic == Statistic::kMean) mean = &r;
    if (r.statistic == Statistic::kStdDev) sd = &r;
    if (r.statistic == Statistic::kPerSampleError) per = &r;
  }
  if (!mean || !sd || !per) throw std::invalid_argument("write_errors_csv: incomplete reports");
  const Eigen::Index d = mean->errors.front().size();
  std::vector<std::string> header{"N", "h"};
  for (Eigen::Index k = 0; k < d; ++k) header.push_back("mean_err_" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < d; ++k) header.push_back("std_err_" + std::to_string(k + 1));
  header.emplace_back("per_sample_err");
  csv::write_row(out, header);
  for (std::size_t n = 0; n < mean->step_counts.size(); ++n) {
    const int steps = mean->step_counts[n];
    std::vector<std::string> row{std::to_string(steps), csv::format_real(1.0 / steps)};
    for (Eigen::Index k = 0; k < d; ++k) row.push_back(csv::format_real(mean->errors[n][k]));
    for (Eigen::Index k = 0; k < d; ++k) row.push_back(csv::format_real(sd->errors[n][k]));
    row.push_back(csv::format_real(per->errors[n][0]));
    csv::write_row(out, row);
  }
}

void write_kde_csv(std::ostream& out, const DensityEstimate& estimate) {
  if (estimate.dimension == 1) {
    csv::write_row(out, {"x", "density"});
    for (std::size_t i = 0; i < estimate.x.size(); ++i) {
      csv::write_row(out, {csv::format_real(estimate.x[i]), csv::format_real(estimate.density[i])});
    }
    return;
  }
  csv::write_row(out, {"x", "y", "density"});
  for (std::size_t i = 0; i < estimate.x.size(); ++i) {
    for (std::size_t j = 0; j < estimate.y.size(); ++j) {
      csv::write_row(out, {csv::format_real(estimate.x[i]), csv::format_real(estimate.y[j]),
                           csv::format_real(estimate.density[i * estimate.y.size() + j])});
    }
  }
}

void write_sensitivity_log_csv(std::ostream& out, const std::vector<SensitivityRow>& rows) {
  const Eigen::Index d = rows.empty() ? 0 : rows.front().f.size();
  std::vector<std::string> header{"sample_index", "step", "t", "f_norm"};
  for (Eigen::Index k = 0; k < d; ++k) header.push_back("f_" + std::to_string(k + 1));
  csv::write_row(out, header);
  for (const SensitivityRow& r : rows) {
    std::vector<std::string> row{std::to_string(r.sample), std::to_string(r.step),
                                 csv::format_real(r.t), csv::format_real(r.norm)};
    for (Eigen::Index k = 0; k < d; ++k) row.push_back(csv::format_real(r.f[k]));
    csv::write_row(out, row);
  }
}

}  // namespace postopt
