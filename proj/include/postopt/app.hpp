#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "postopt/marching.hpp"
#include "postopt/problem.hpp"

namespace postopt {

inline constexpr std::string_view kVersion = "0.1.0";

/// Raised for malformed or inconsistent run configurations. Always thrown
/// before any numerical work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct AdvDiffConfig {
  int grid_cells = 200;
  double beta = 1e-3;
  std::vector<double> m_true{0.05, 0.4};
  std::vector<double> m_prior{0.06, 0.32};
  double noise_std = 0.0;
  std::uint64_t noise_seed = 0;
  std::vector<double> basin_lower{0.01, 0.0};
  std::vector<double> basin_upper{0.2, 1.0};
};

struct RunConfig {
  std::string problem = "logistic1d";
  std::vector<double> nominal;
  /// Relative half-width per coordinate (eps_k = r_k |nominal_k|).
  std::vector<double> relative;
  /// Absolute half-widths; exclusive with `relative`.
  std::vector<double> half_widths;
  std::vector<double> initial_guess;
  int num_samples = 5000;
  std::uint64_t seed = 2024;
  std::vector<int> step_counts;
  Scheme scheme = Scheme::kForwardEuler;
  bool with_oracle = true;
  bool warm_start = true;
  std::string output_dir = "out";
  int workers = 0;
  double fd_step = kDefaultFdStep;
  int kde_points = 256;
  /// Target parameters for the trajectory command.
  std::vector<double> trajectory_theta;
  int trajectory_steps = 20;
  AdvDiffConfig advdiff;

  /// Throws ConfigError on the first inconsistency.
  void validate() const;
};

[[nodiscard]] const std::vector<std::string>& builtin_problems();

/// Settings mirroring the published experiments for each built-in problem.
RunConfig default_config(std::string_view problem);

/// Starts from default_config(problem) and overlays every key present.
/// Unknown keys, wrong types and invalid values raise ConfigError.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

std::unique_ptr<Problem> make_problem(const RunConfig& config);
ParameterBox make_box(const RunConfig& config);

// ---- commands ---------------------------------------------------------------

struct CheckEntry {
  std::string problem;
  DerivativeCheckReport report;
  double tolerance = 0.0;
  int points = 0;
  std::string error;

  [[nodiscard]] bool passed() const { return error.empty() && report.passes(tolerance); }
};

/// Derivative check of every built-in problem at one fixed reference point
/// and 10 random points of its basin times its box. `config` supplies fd_step,
/// the seed, the advdiff settings and, for its own problem, the box.
std::vector<CheckEntry> run_check(const RunConfig& config, std::ostream& log);
/// Exit status: 0 iff every problem passes.
int cmd_check(const RunConfig& config, std::ostream& log);

/// Nominal solve, propagation, error summary and densities. Writes
/// samples.csv, errors_vs_N.csv (oracle runs), kde_*.csv and manifest.json
/// into config.output_dir and returns the manifest. A failed nominal solve
/// throws NominalSolveError; per-sample failures are only counted.
nlohmann::json cmd_study(const RunConfig& config, std::ostream& log);

/// One march to config.trajectory_theta with config.trajectory_steps steps.
/// Writes trajectory.csv and sensitivity.csv. Throws ConfigError naming the
/// first coordinate outside the box.
nlohmann::json cmd_trajectory(const RunConfig& config, std::ostream& log);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace postopt
