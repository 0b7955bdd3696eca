// postopt: derivative checks, Monte Carlo studies and single trajectories
// for the built-in post-optimality problems.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "postopt/app.hpp"
#include "postopt/newton.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string problem;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::vector<int> steps;
  std::string scheme;
  std::optional<bool> oracle;
  std::optional<int> workers;
  std::string out;
  std::optional<double> fd_step;
  std::vector<double> theta;
};

postopt::RunConfig resolve(const Overrides& o) {
  postopt::RunConfig c;
  if (!o.config_path.empty()) {
    c = postopt::load_config(o.config_path);
    if (!o.problem.empty() && o.problem != c.problem) {
      throw postopt::ConfigError("--problem " + o.problem + " contradicts the config file (" +
                                 c.problem + ")");
    }
  } else {
    c = postopt::default_config(o.problem.empty() ? "logistic1d" : o.problem);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.samples) c.num_samples = *o.samples;
  if (!o.steps.empty()) {
    c.step_counts = o.steps;
    c.trajectory_steps = o.steps.front();
  }
  if (!o.scheme.empty()) {
    try {
      c.scheme = postopt::parse_scheme(o.scheme);
    } catch (const std::invalid_argument& e) {
      throw postopt::ConfigError(e.what());
    }
  }
  if (o.oracle) c.with_oracle = *o.oracle;
  if (o.workers) c.workers = *o.workers;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.fd_step) c.fd_step = *o.fd_step;
  if (!o.theta.empty()) c.trajectory_theta = o.theta;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-optimality sensitivity marching and Monte Carlo studies"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  bool oracle_flag = true;
  app.add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--problem", o.problem, "quadratic | cubic | logistic1d | advdiff");
  app.add_option("--seed", o.seed, "Top-level random seed");
  app.add_option("--samples", o.samples, "Number of Monte Carlo samples");
  app.add_option("--steps", o.steps, "Step counts, e.g. 1,2,4,8,16")->delimiter(',');
  app.add_option("--scheme", o.scheme, "forward_euler | heun | rk4");
  auto* oracle_opt =
      app.add_flag("--oracle,!--no-oracle", oracle_flag, "Re-solve each sample with Newton");
  app.add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--fd-step", o.fd_step, "Relative finite-difference step for check");
  app.add_option("--theta", o.theta, "Target parameters for trajectory, e.g. 0.35,0.8")
      ->delimiter(',');

  auto* check = app.add_subcommand("check", "Derivative checks on all built-in problems");
  auto* study = app.add_subcommand("study", "Monte Carlo study with optional Newton oracle");
  auto* trajectory = app.add_subcommand("trajectory", "Single march with sensitivity log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (oracle_opt->count() > 0) o.oracle = oracle_flag;

  try {
    const postopt::RunConfig config = resolve(o);
    if (check->parsed()) return postopt::cmd_check(config, std::cout);
    if (study->parsed()) postopt::cmd_study(config, std::cout);
    if (trajectory->parsed()) postopt::cmd_trajectory(config, std::cout);
    return 0;
  } catch (const postopt::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const postopt::NominalSolveError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
