#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "glp/experiment.hpp"
#include "glp/parallel.hpp"

namespace glp::cli {

enum ExitCode { ok = 0, failure = 1, config_error = 2, optimizer_failure = 3, calibration_failure = 4, io_error = 5 };

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  Parallelism parallelism;
  std::optional<std::filesystem::path> data;         // default: the run directory's data file
  std::optional<std::filesystem::path> profiles;     // default: the run directory
  std::optional<std::filesystem::path> calibration;  // default: the run directory
};

int cmd_simulate(const RunContext& ctx);
int cmd_profile(const RunContext& ctx);
int cmd_calibrate(const RunContext& ctx);
int cmd_coverage(const RunContext& ctx);
/// simulate, profile, calibrate, then coverage when coverage.B > 0.
int cmd_run(const RunContext& ctx);

}  // namespace glp::cli
