#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "glp/errors.hpp"

using namespace glp;
using namespace glp::cli;

int main(int argc, char** argv) {
  CLI::App app{"Generalised likelihood profiles with bootstrap-calibrated coverage"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  std::string data, profiles, calibration;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "master seed; overrides the config");
    sub->add_option("--out", out, "run directory; overrides output_dir");
    sub->add_option("--threads", threads, "worker threads, 0 for the OpenMP default")->check(CLI::NonNegativeNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "draw the observed dataset");
  auto* profile = app.add_subcommand("profile", "MGLE and profile curves");
  auto* calibrate = app.add_subcommand("calibrate", "bootstrap delta calibration and confidence sets");
  auto* coverage = app.add_subcommand("coverage", "repeated-experiment coverage check");
  auto* run = app.add_subcommand("run", "simulate, profile, calibrate, then coverage if coverage.B > 0");
  for (auto* sub : {simulate, profile, calibrate, coverage, run}) common(sub);
  profile->add_option("--data", data, "dataset file (default: the run directory's)");
  calibrate->add_option("--profiles", profiles, "directory holding mgle.json and profile CSVs");
  coverage->add_option("--calibration", calibration, "directory holding calibration outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }

  try {
    std::string output_dir = "glp-run";
    RunContext ctx;
    ctx.config = load_config(config_path, &output_dir);
    if (seed) ctx.config.seed = *seed;
    ctx.out = out.empty() ? output_dir : out;
    ctx.parallelism = {Execution::parallel, threads};
    if (!data.empty()) ctx.data = data;
    if (!profiles.empty()) ctx.profiles = profiles;
    if (!calibration.empty()) ctx.calibration = calibration;

    if (simulate->parsed()) return cmd_simulate(ctx);
    if (profile->parsed()) return cmd_profile(ctx);
    if (calibrate->parsed()) return cmd_calibrate(ctx);
    if (coverage->parsed()) return cmd_coverage(ctx);
    return cmd_run(ctx);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return ExitCode::io_error;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ExitCode::config_error;
  } catch (const OptimizerError& e) {
    std::cerr << "optimizer error: " << e.what() << '\n';
    return ExitCode::optimizer_failure;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << '\n';
    return ExitCode::calibration_failure;
  } catch (const TruncationError& e) {
    std::cerr << "calibration error: " << e.what() << '\n';
    return ExitCode::calibration_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::failure;
  }
}
