#include "postopt/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "postopt/advdiff.hpp"
#include "postopt/csv.hpp"
#include "postopt/newton.hpp"
#include "postopt/problems.hpp"
#include "postopt/uq.hpp"

namespace postopt {

using nlohmann::json;

namespace {

// ---- config parsing helpers -------------------------------------------------

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("config: '" + std::string(where) + "' must be an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return item.key() == a; });
    if (!known) {
      throw ConfigError("config: unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("config: '" + key + "' must be finite");
  return x;
}

long long as_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
  return v.get<long long>();
}

int as_int(const json& v, const std::string& key) {
  const long long x = as_integer(v, key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError("config: '" + key + "' is out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t as_seed(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(v.get<long long>());
  }
  throw ConfigError("config: '" + key + "' must be a non-negative integer");
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config: '" + key + "' must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_reals(const json& v, const std::string& key) {
  if (v.is_number()) return {as_real(v, key)};
  if (!v.is_array()) throw ConfigError("config: '" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const json& x : v) out.push_back(as_real(x, key));
  return out;
}

std::vector<int> as_ints(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("config: '" + key + "' must be a list of integers");
  std::vector<int> out;
  for (const json& x : v) out.push_back(as_int(x, key));
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

int problem_dim(std::string_view problem) {
  if (problem == "quadratic") return 1;
  if (problem == "cubic") return 2;
  return 3;
}

int decision_dim_of(std::string_view problem) { return problem == "advdiff" ? 2 : 1; }

InverseProblemSettings advdiff_settings(const AdvDiffConfig& c) {
  InverseProblemSettings s;
  s.grid_cells = c.grid_cells;
  s.beta = c.beta;
  s.m_true = DecisionVector::from(c.m_true);
  s.m_prior = DecisionVector::from(c.m_prior);
  s.noise_std = c.noise_std;
  s.noise_seed = c.noise_seed;
  s.basin = Box{to_vector(c.basin_lower), to_vector(c.basin_upper)};
  return s;
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

std::string join(const std::vector<double>& v, int digits = 6) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i], digits);
  return out + "]";
}

json optional_reals(const std::vector<std::optional<double>>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x ? json(*x) : json(nullptr));
  return out;
}

json solve_json(const SolveResult& r) {
  return {{"minimizer", to_std(r.minimizer)},
          {"objective", r.objective},
          {"grad_norm", r.grad_norm},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"hessian_min_eigenvalue", r.hessian_min_eigenvalue},
          {"message", r.message}};
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void write_csv_file(const std::filesystem::path& path, const auto& writer) {
  std::ostringstream s;
  writer(s);
  write_file_atomic(path, s.str());
}

}  // namespace

// ---- config -----------------------------------------------------------------

const std::vector<std::string>& builtin_problems() {
  static const std::vector<std::string> names{"quadratic", "cubic", "logistic1d", "advdiff"};
  return names;
}

RunConfig default_config(std::string_view problem) {
  RunConfig c;
  c.problem = std::string(problem);
  if (problem == "quadratic") {
    c.nominal = {1.0};
    c.relative = {0.4};
    c.initial_guess = {0.0};
    c.step_counts = {1, 2, 4, 8, 16};
    c.trajectory_theta = {1.2};
  } else if (problem == "cubic") {
    c.nominal = {0.3, 0.75};
    // Theta = [0.2, 0.4] x [0.65, 0.85]
    c.half_widths = {0.1, 0.1};
    c.initial_guess = {0.8};
    c.step_counts = {1, 2, 4, 8, 16};
    c.trajectory_theta = {0.35, 0.8};
  } else if (problem == "logistic1d") {
    c.nominal = {1.0, 3.0, 0.1};
    c.relative = {0.4};
    c.initial_guess = {0.5};
    c.step_counts = {1, 2, 4, 8, 16};
    c.trajectory_theta = {1.4, 2.4, 0.12};
  } else if (problem == "advdiff") {
    c.nominal = {10.0, 0.05, 1.0};
    c.relative = {0.2};
    c.initial_guess = c.advdiff.m_prior;
    c.step_counts = {1, 6, 12, 20};
    c.trajectory_theta = {11.0, 0.055, 0.9};
  } else {
    throw ConfigError("config: unknown problem '" + std::string(problem) +
                      "' (expected quadratic, cubic, logistic1d or advdiff)");
  }
  return c;
}

void RunConfig::validate() const {
  const auto& names = builtin_problems();
  if (std::find(names.begin(), names.end(), problem) == names.end()) {
    throw ConfigError("config: unknown problem '" + problem + "'");
  }
  const auto p = static_cast<std::size_t>(problem_dim(problem));
  const auto d = static_cast<std::size_t>(decision_dim_of(problem));
  if (nominal.size() != p) {
    throw ConfigError("config: box.nominal needs " + std::to_string(p) + " values for " + problem);
  }
  if (relative.empty() == half_widths.empty()) {
    throw ConfigError("config: give exactly one of box.relative and box.half_widths");
  }
  if (!relative.empty()) {
    if (relative.size() != 1 && relative.size() != p) {
      throw ConfigError("config: box.relative needs 1 or " + std::to_string(p) + " values");
    }
    for (double r : relative) {
      if (r < 0.0) throw ConfigError("config: box.relative must be non-negative");
    }
  }
  if (!half_widths.empty()) {
    if (half_widths.size() != p) {
      throw ConfigError("config: box.half_widths needs " + std::to_string(p) + " values");
    }
    for (double w : half_widths) {
      if (w < 0.0) throw ConfigError("config: box.half_widths must be non-negative");
    }
  }
  if (initial_guess.size() != d) {
    throw ConfigError("config: initial_guess needs " + std::to_string(d) + " values");
  }
  if (num_samples < 1) throw ConfigError("config: num_samples must be at least 1");
  if (step_counts.empty()) throw ConfigError("config: steps must not be empty");
  for (int n : step_counts) {
    if (n < 1) throw ConfigError("config: every step count must be at least 1");
  }
  if (std::set<int>(step_counts.begin(), step_counts.end()).size() != step_counts.size()) {
    throw ConfigError("config: step counts must be distinct");
  }
  if (workers < 0) throw ConfigError("config: workers must be >= 0 (0 = all cores)");
  if (!(fd_step > 0.0)) throw ConfigError("config: fd_step must be positive");
  if (kde_points < 2) throw ConfigError("config: kde_points must be at least 2");
  if (!trajectory_theta.empty() && trajectory_theta.size() != p) {
    throw ConfigError("config: trajectory.theta needs " + std::to_string(p) + " values");
  }
  if (trajectory_steps < 1) throw ConfigError("config: trajectory.steps must be at least 1");
  if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");

  const AdvDiffConfig& a = advdiff;
  if (a.grid_cells < 16) throw ConfigError("config: advdiff.grid_cells must be at least 16");
  if (!(a.beta > 0.0)) throw ConfigError("config: advdiff.beta must be positive");
  if (a.noise_std < 0.0) throw ConfigError("config: advdiff.noise_std must be non-negative");
  for (const auto* v : {&a.m_true, &a.m_prior, &a.basin_lower, &a.basin_upper}) {
    if (v->size() != 2) throw ConfigError("config: advdiff vectors need 2 values (kappa, v)");
  }
  if (!(a.m_true[0] > 0.0) || !(a.m_prior[0] > 0.0)) {
    throw ConfigError("config: advdiff kappa values must be positive");
  }
  for (std::size_t k = 0; k < 2; ++k) {
    if (!(a.basin_lower[k] < a.basin_upper[k])) {
      throw ConfigError("config: advdiff.basin lower must be below upper");
    }
  }
}

RunConfig config_from_json(const json& doc) {
  reject_unknown(doc, "the top level",
                 {"problem", "box", "initial_guess", "num_samples", "seed", "steps", "scheme",
                  "with_oracle", "warm_start", "output_dir", "workers", "fd_step", "kde_points",
                  "trajectory", "advdiff"});
  const std::string problem =
      doc.contains("problem") ? as_string(doc["problem"], "problem") : "logistic1d";
  RunConfig c = default_config(problem);

  if (doc.contains("box")) {
    const json& box = doc["box"];
    reject_unknown(box, "box", {"nominal", "relative", "half_widths"});
    if (box.contains("relative") && box.contains("half_widths")) {
      throw ConfigError("config: give exactly one of box.relative and box.half_widths");
    }
    if (box.contains("nominal")) c.nominal = as_reals(box["nominal"], "box.nominal");
    if (box.contains("relative")) {
      c.relative = as_reals(box["relative"], "box.relative");
      c.half_widths.clear();
    }
    if (box.contains("half_widths")) {
      c.half_widths = as_reals(box["half_widths"], "box.half_widths");
      c.relative.clear();
    }
  }
  if (doc.contains("advdiff")) {
    const json& a = doc["advdiff"];
    reject_unknown(a, "advdiff",
                   {"grid_cells", "beta", "m_true", "m_prior", "noise_std", "noise_seed", "basin"});
    AdvDiffConfig& ad = c.advdiff;
    if (a.contains("grid_cells")) ad.grid_cells = as_int(a["grid_cells"], "advdiff.grid_cells");
    if (a.contains("beta")) ad.beta = as_real(a["beta"], "advdiff.beta");
    if (a.contains("m_true")) ad.m_true = as_reals(a["m_true"], "advdiff.m_true");
    if (a.contains("m_prior")) {
      ad.m_prior = as_reals(a["m_prior"], "advdiff.m_prior");
      if (problem == "advdiff") c.initial_guess = ad.m_prior;
    }
    if (a.contains("noise_std")) ad.noise_std = as_real(a["noise_std"], "advdiff.noise_std");
    if (a.contains("noise_seed")) ad.noise_seed = as_seed(a["noise_seed"], "advdiff.noise_seed");
    if (a.contains("basin")) {
      const json& b = a["basin"];
      reject_unknown(b, "advdiff.basin", {"lower", "upper"});
      if (b.contains("lower")) ad.basin_lower = as_reals(b["lower"], "advdiff.basin.lower");
      if (b.contains("upper")) ad.basin_upper = as_reals(b["upper"], "advdiff.basin.upper");
    }
  }
  if (doc.contains("initial_guess")) {
    c.initial_guess = as_reals(doc["initial_guess"], "initial_guess");
  }
  if (doc.contains("num_samples")) c.num_samples = as_int(doc["num_samples"], "num_samples");
  if (doc.contains("seed")) c.seed = as_seed(doc["seed"], "seed");
  if (doc.contains("steps")) c.step_counts = as_ints(doc["steps"], "steps");
  if (doc.contains("scheme")) {
    try {
      c.scheme = parse_scheme(as_string(doc["scheme"], "scheme"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (doc.contains("with_oracle")) c.with_oracle = as_bool(doc["with_oracle"], "with_oracle");
  if (doc.contains("warm_start")) c.warm_start = as_bool(doc["warm_start"], "warm_start");
  if (doc.contains("output_dir")) c.output_dir = as_string(doc["output_dir"], "output_dir");
  if (doc.contains("workers")) c.workers = as_int(doc["workers"], "workers");
  if (doc.contains("fd_step")) c.fd_step = as_real(doc["fd_step"], "fd_step");
  if (doc.contains("kde_points")) c.kde_points = as_int(doc["kde_points"], "kde_points");
  if (doc.contains("trajectory")) {
    const json& t = doc["trajectory"];
    reject_unknown(t, "trajectory", {"theta", "steps"});
    if (t.contains("theta")) c.trajectory_theta = as_reals(t["theta"], "trajectory.theta");
    if (t.contains("steps")) c.trajectory_steps = as_int(t["steps"], "trajectory.steps");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json to_json(const RunConfig& c) {
  json box = {{"nominal", c.nominal}};
  if (!c.relative.empty()) box["relative"] = c.relative;
  if (!c.half_widths.empty()) box["half_widths"] = c.half_widths;
  return {{"problem", c.problem},
          {"box", box},
          {"initial_guess", c.initial_guess},
          {"num_samples", c.num_samples},
          {"seed", c.seed},
          {"steps", c.step_counts},
          {"scheme", std::string(to_string(c.scheme))},
          {"with_oracle", c.with_oracle},
          {"warm_start", c.warm_start},
          {"output_dir", c.output_dir},
          {"workers", c.workers},
          {"fd_step", c.fd_step},
          {"kde_points", c.kde_points},
          {"trajectory", {{"theta", c.trajectory_theta}, {"steps", c.trajectory_steps}}},
          {"advdiff",
           {{"grid_cells", c.advdiff.grid_cells},
            {"beta", c.advdiff.beta},
            {"m_true", c.advdiff.m_true},
            {"m_prior", c.advdiff.m_prior},
            {"noise_std", c.advdiff.noise_std},
            {"noise_seed", c.advdiff.noise_seed},
            {"basin", {{"lower", c.advdiff.basin_lower}, {"upper", c.advdiff.basin_upper}}}}}};
}

ParameterBox make_box(const RunConfig& c) {
  const ParameterVector nominal = ParameterVector::from(c.nominal);
  if (!c.half_widths.empty()) return ParameterBox(nominal, to_vector(c.half_widths));
  if (c.relative.size() == 1) return ParameterBox::relative(nominal, c.relative.front());
  return ParameterBox::relative(nominal, to_vector(c.relative));
}

std::unique_ptr<Problem> make_problem(const RunConfig& c) {
  if (c.problem == "quadratic") return std::make_unique<QuadraticProblem>();
  if (c.problem == "cubic") {
    try {
      return std::make_unique<CubicIllustrationProblem>(make_box(c));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (c.problem == "logistic1d") return std::make_unique<Logistic1DProblem>();
  if (c.problem == "advdiff") {
    return std::make_unique<InverseProblem>(InverseProblem::from_settings(
        advdiff_settings(c.advdiff), ParameterVector::from(c.nominal)));
  }
  throw ConfigError("config: unknown problem '" + c.problem + "'");
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---- check ------------------------------------------------------------------

namespace {

struct CheckDomain {
  Vector lower;
  Vector upper;
  double tolerance;
  // A fixed, non-stationary point checked before the random ones. A
  // minimizer would not do: there g ~ 0 and the relative gradient error is
  // pure finite-difference noise.
  std::vector<double> anchor_m;
  std::vector<double> anchor_theta;
};

// Decision-space region sampled by the check, with the pass threshold.
CheckDomain check_domain(const std::string& problem, const RunConfig& c) {
  const Vector one = Vector::Constant(1, 1.0);
  if (problem == "quadratic") return {0.0 * one, 2.0 * one, 1e-7, {0.3}, {0.1}};
  if (problem == "cubic") return {0.5 * one, 1.0 * one, 1e-6, {0.6}, c.nominal};
  if (problem == "logistic1d") return {0.5 * one, 1.5 * one, 1e-6, {0.9}, c.nominal};
  return {to_vector(c.advdiff.basin_lower), to_vector(c.advdiff.basin_upper), 1e-4,
          c.advdiff.m_true, c.nominal};
}

}  // namespace

std::vector<CheckEntry> run_check(const RunConfig& config, std::ostream& log) {
  constexpr int kRandomPoints = 10;
  std::vector<CheckEntry> entries;
  std::uint64_t stream = 0;
  for (const std::string& name : builtin_problems()) {
    RunConfig c = name == config.problem ? config : default_config(name);
    c.advdiff = config.advdiff;
    if (name == "advdiff" && name != config.problem) c.initial_guess = c.advdiff.m_prior;

    CheckEntry entry;
    entry.problem = name;
    const CheckDomain domain = check_domain(name, c);
    entry.tolerance = domain.tolerance;
    entry.report.fd_step = config.fd_step;
    try {
      const auto problem = make_problem(c);
      const ParameterBox box = make_box(c);
      entry.report.merge(check_derivatives(*problem, DecisionVector::from(domain.anchor_m),
                                           ParameterVector::from(domain.anchor_theta),
                                           config.fd_step));
      ++entry.points;
      Vector lo(box.dimension());
      Vector hi(box.dimension());
      for (Eigen::Index k = 0; k < box.dimension(); ++k) {
        lo[k] = box.lower(k);
        hi[k] = box.upper(k);
      }
      for (int i = 0; i < kRandomPoints; ++i, ++stream) {
        const DecisionVector m(uniform_in(domain.lower, domain.upper, config.seed, 2 * stream));
        const ParameterVector theta(uniform_in(lo, hi, config.seed, 2 * stream + 1));
        entry.report.merge(check_derivatives(*problem, m, theta, config.fd_step));
        ++entry.points;
      }
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    log << std::left << std::setw(11) << name << " points=" << entry.points
        << "  grad=" << fmt(entry.report.max_rel_error_gradient, 3)
        << "  hess=" << fmt(entry.report.max_rel_error_hessian, 3)
        << "  mixed=" << fmt(entry.report.max_rel_error_mixed, 3)
        << "  tol=" << fmt(entry.tolerance, 3) << "  " << (entry.passed() ? "PASS" : "FAIL");
    if (!entry.error.empty()) log << "  (" << entry.error << ")";
    log << '\n';
    entries.push_back(std::move(entry));
  }
  return entries;
}

int cmd_check(const RunConfig& config, std::ostream& log) {
  const auto entries = run_check(config, log);
  const bool ok = std::all_of(entries.begin(), entries.end(),
                              [](const CheckEntry& e) { return e.passed(); });
  log << (ok ? "all derivative checks passed\n" : "derivative check FAILED\n");
  return ok ? 0 : 1;
}

// ---- study ------------------------------------------------------------------

namespace {

struct KdeSource {
  std::string name;
  std::vector<Vector> values;
};

json write_densities(const SampleStudy& study, const RunConfig& config,
                     const std::filesystem::path& dir) {
  json files = json::array();
  json skipped = json::array();

  std::vector<const SampleRecord*> valid;
  for (const SampleRecord& s : study.samples) {
    if (s.valid()) valid.push_back(&s);
  }
  std::vector<KdeSource> sources;
  for (std::size_t n = 0; n < study.step_counts.size(); ++n) {
    KdeSource src{"N" + std::to_string(study.step_counts[n]), {}};
    for (const SampleRecord* s : valid) src.values.push_back(s->marches[n].final_state());
    sources.push_back(std::move(src));
  }
  if (study.with_oracle) {
    KdeSource src{"oracle", {}};
    for (const SampleRecord* s : valid) src.values.push_back(s->oracle->minimizer);
    sources.push_back(std::move(src));
  }

  const Eigen::Index d = study.decision_dim();
  std::vector<std::vector<std::vector<double>>> coords(sources.size());
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (Eigen::Index k = 0; k < d; ++k) coords[s].push_back(coordinate(sources[s].values, k));
  }

  // one grid per coordinate, shared by every source so the curves overlay
  std::vector<std::optional<GridAxis>> grids(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<std::vector<double>> sets;
    for (const auto& c : coords) sets.push_back(c[static_cast<std::size_t>(k)]);
    try {
      grids[static_cast<std::size_t>(k)] = covering_grid(sets, config.kde_points);
    } catch (const std::exception& e) {
      skipped.push_back({{"coordinate", k + 1}, {"reason", e.what()}});
    }
  }

  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& grid = grids[static_cast<std::size_t>(k)];
      if (!grid) continue;
      const std::string file =
          "kde_marginal_" + std::to_string(k + 1) + "_" + sources[s].name + ".csv";
      try {
        const DensityEstimate est = kde_marginal(coords[s][static_cast<std::size_t>(k)], *grid);
        write_csv_file(dir / file, [&](std::ostream& o) { write_kde_csv(o, est); });
        files.push_back({{"file", file},
                         {"source", sources[s].name},
                         {"coordinate", k + 1},
                         {"samples", sources[s].values.size()},
                         {"bandwidth", est.bandwidth}});
      } catch (const std::exception& e) {
        skipped.push_back({{"file", file}, {"reason", e.what()}});
      }
    }
    if (d == 2 && grids[0] && grids[1]) {
      const std::string file = "kde_joint_" + sources[s].name + ".csv";
      try {
        const DensityEstimate est =
            kde_joint(coords[s][0], coords[s][1], *grids[0], *grids[1]);
        write_csv_file(dir / file, [&](std::ostream& o) { write_kde_csv(o, est); });
        files.push_back({{"file", file},
                         {"source", sources[s].name},
                         {"samples", sources[s].values.size()},
                         {"bandwidth", est.bandwidth}});
      } catch (const std::exception& e) {
        skipped.push_back({{"file", file}, {"reason", e.what()}});
      }
    }
  }
  return {{"kernel", "gaussian"},
          {"marginal_bandwidth", "silverman: 0.9 min(sd, IQR/1.34) n^(-1/5)"},
          {"joint_bandwidth", "product kernel: sd_k n^(-1/6)"},
          {"grid_points", config.kde_points},
          {"samples_used", "valid samples only"},
          {"files", files},
          {"skipped", skipped}};
}

void write_field_csv(const InverseProblem& ip, const DecisionVector& m, const ParameterVector& theta,
                     const std::filesystem::path& path) {
  const Vector x = ip.model().nodes();
  const Vector u = ip.model().solve(m, theta);
  write_csv_file(path, [&](std::ostream& o) {
    csv::write_row(o, {"x", "u_obs", "u_nominal"});
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      csv::write_row(o, {csv::format_real(x[i]), csv::format_real(ip.observations()[i]),
                         csv::format_real(u[i])});
    }
  });
}

json base_manifest(const char* command, const RunConfig& config) {
  return {{"tool", "postopt"},
          {"command", command},
          {"version", std::string(kVersion)},
          {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__},
          {"config", to_json(config)}};
}

}  // namespace

json cmd_study(const RunConfig& config, std::ostream& log) {
  config.validate();
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);

  json manifest = base_manifest("study", config);
  json timings;
  Stopwatch clock;
  const Stopwatch total;

  const auto problem = make_problem(config);
  const ParameterBox box = make_box(config);
  timings["setup"] = clock.lap();

  StudyOptions options;
  options.num_samples = config.num_samples;
  options.step_counts = config.step_counts;
  options.seed = config.seed;
  options.with_oracle = config.with_oracle;
  options.scheme = config.scheme;
  options.warm_start = config.warm_start;
  options.workers = config.workers;

  const SolveResult nominal =
      solve_nominal(*problem, box, DecisionVector::from(config.initial_guess), options.newton);
  timings["nominal_solve"] = clock.lap();
  manifest["nominal"] = solve_json(nominal);
  log << "nominal minimizer " << join(to_std(nominal.minimizer), 10) << " after "
      << nominal.iterations << " Newton iterations\n";

  const SampleStudy study = propagate_study(*problem, box, nominal, options);
  timings["propagate"] = clock.lap();

  const FailureCounts failures = count_failures(study);
  json failed_indices = json::array();
  for (const SampleRecord& s : study.samples) {
    if (!s.valid()) failed_indices.push_back(s.index);
  }
  manifest["samples"] = {{"total", study.num_samples()},
                         {"valid", study.num_samples() - failures.failed_samples},
                         {"failed", failures.failed_samples},
                         {"failed_indices", failed_indices}};
  manifest["failures"] = {{"failed_samples", failures.failed_samples},
                          {"march_aborted_indefinite", failures.march_aborted_indefinite},
                          {"march_aborted_nonfinite", failures.march_aborted_nonfinite},
                          {"oracle_not_converged", failures.oracle_not_converged},
                          {"left_basin", failures.left_basin}};
  log << study.num_samples() << " samples, " << failures.failed_samples << " failed ("
      << failures.march_aborted_indefinite << " indefinite, " << failures.march_aborted_nonfinite
      << " non-finite, " << failures.oracle_not_converged << " oracle non-converged), "
      << failures.left_basin << " left the basin hint\n";

  std::vector<std::string> outputs{"samples.csv"};
  write_csv_file(dir / "samples.csv", [&](std::ostream& o) { write_samples_csv(o, study); });

  if (config.with_oracle) {
    const auto reports = summary_errors(study);
    write_csv_file(dir / "errors_vs_N.csv", [&](std::ostream& o) { write_errors_csv(o, reports); });
    outputs.emplace_back("errors_vs_N.csv");
    json errors = json::array();
    for (std::size_t n = 0; n < study.step_counts.size(); ++n) {
      errors.push_back({{"N", study.step_counts[n]},
                        {"h", 1.0 / study.step_counts[n]},
                        {"mean", to_std(reports[0].errors[n])},
                        {"std", to_std(reports[1].errors[n])},
                        {"per_sample", reports[2].errors[n][0]}});
      log << "N=" << std::setw(4) << study.step_counts[n]
          << "  mean_err=" << join(to_std(reports[0].errors[n]), 4)
          << "  std_err=" << join(to_std(reports[1].errors[n]), 4)
          << "  per_sample=" << fmt(reports[2].errors[n][0], 4) << '\n';
    }
    manifest["errors"] = errors;
    json slopes;
    for (const auto& rep : reports) slopes[std::string(to_string(rep.statistic))] = optional_reals(rep.slopes);
    manifest["slopes"] = slopes;
    log << "log-log slopes: " << slopes.dump() << '\n';
  }
  timings["summary"] = clock.lap();

  manifest["kde"] = write_densities(study, config, dir);
  for (const auto& f : manifest["kde"]["files"]) outputs.push_back(f["file"].get<std::string>());
  timings["kde"] = clock.lap();

  if (const auto* ip = dynamic_cast<const InverseProblem*>(problem.get())) {
    write_field_csv(*ip, DecisionVector(nominal.minimizer), box.nominal(), dir / "field.csv");
    outputs.emplace_back("field.csv");
  }
  manifest["warm_start"] = study.warm_start;
  manifest["outputs"] = outputs;
  timings["write"] = clock.lap();
  timings["total"] = Stopwatch(total).lap();
  manifest["timings_s"] = timings;

  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  log << "wrote " << outputs.size() + 1 << " files to " << dir.string() << '\n';
  return manifest;
}

// ---- trajectory -------------------------------------------------------------

json cmd_trajectory(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.trajectory_theta.empty()) {
    throw ConfigError("trajectory: no target parameters given (use --theta)");
  }
  const ParameterBox box = make_box(config);
  const ParameterVector target = ParameterVector::from(config.trajectory_theta);
  const Eigen::Index bad = box.first_violation(target);
  if (bad >= 0) {
    throw ConfigError("trajectory: theta_" + std::to_string(bad + 1) + " = " +
                      fmt(target[bad], 10) + " lies outside the box [" + fmt(box.lower(bad), 10) +
                      ", " + fmt(box.upper(bad), 10) + "]");
  }
  const std::filesystem::path dir = config.output_dir;
  std::filesystem::create_directories(dir);

  const auto problem = make_problem(config);
  const SolveResult nominal =
      solve_nominal(*problem, box, DecisionVector::from(config.initial_guess));
  const DecisionVector start(nominal.minimizer);
  const Trajectory traj =
      march(*problem, start, ParameterLine(box.nominal(), target),
            MarchConfig{config.trajectory_steps, config.scheme, true});

  write_csv_file(dir / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, traj); });
  write_csv_file(dir / "sensitivity.csv", [&](std::ostream& o) { write_sensitivity_csv(o, traj); });

  json manifest = base_manifest("trajectory", config);
  manifest["nominal"] = solve_json(nominal);
  manifest["march"] = {{"status", std::string(to_string(traj.status))},
                       {"steps_taken", traj.steps_taken},
                       {"rhs_evals", traj.rhs_evals},
                       {"left_basin", traj.left_basin},
                       {"final_state", to_std(traj.final_state())},
                       {"message", traj.message}};
  log << "march " << to_string(traj.status) << " after " << traj.steps_taken
      << " steps, final state " << join(to_std(traj.final_state()), 12) << '\n';
  if (config.with_oracle) {
    const SolveResult oracle = newton_solve(*problem, target, start);
    manifest["oracle"] = solve_json(oracle);
    const double err = (traj.final_state() - oracle.minimizer).norm();
    manifest["error_vs_oracle"] = err;
    log << "oracle " << join(to_std(oracle.minimizer), 12)
        << (oracle.converged ? "" : " (not converged)") << ", error " << fmt(err, 4) << '\n';
  }
  manifest["outputs"] = {"trajectory.csv", "sensitivity.csv"};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace postopt
