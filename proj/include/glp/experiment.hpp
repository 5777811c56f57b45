#pragma once

// End-to-end runs shared by the command-line tool and the acceptance suite:
// observed data, MGLE and profiles, bootstrap calibration, coverage checks.
//
// Stream layout under the master seed S:
//   split(0)            observed dataset
//   split(1)            random-walk moment variance table of the observed data
//   split(2)()          bootstrap calibration seed
//   split(3).split(i)() coverage seed for the i-th validation parameter

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "glp/calibrate.hpp"
#include "glp/models/cmp.hpp"
#include "glp/models/random_walk.hpp"

namespace glp {

enum class ModelKind { cmp, random_walk };

struct ProfileSpec {
  std::string interest;
  std::size_t M = 100;
  std::optional<std::pair<double, double>> range;  // default: the parameter's bounds
};

struct CoverageSpec {
  std::size_t B = 0;
  std::vector<double> alphas{0.05, 0.1, 0.2, 0.32, 0.5};
  std::vector<ParameterVector> theta_true;  // empty: the experiment's true parameter
  std::vector<double> delta_star;           // per profile; empty: taken from the calibration
  bool per_alpha = false;                   // re-search delta* at each alpha from the calibration replicates
};

struct ExperimentConfig {
  ModelKind model = ModelKind::cmp;
  ParameterVector true_params;
  std::size_t n = 2000;  // CMP sample size
  rw::RandomWalkSetup walk;
  ParameterSpace space = cmp::cmp_parameter_space();
  std::vector<ProfileSpec> profiles;
  CalibrationConfig calibration;
  CoverageSpec coverage;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;

  /// Defaults for a model: its parameter box and one profile per parameter.
  static ExperimentConfig defaults(ModelKind model);
  void validate() const;
};

using ObservedData = std::variant<cmp::CountDataset, rw::LifetimeDataset>;

struct ProfileStage {
  OptimResult mgle;
  std::vector<ProfileCurve> curves;  // one per profile spec
};

struct CalibrationStage {
  std::vector<CalibrationResult> results;
  std::vector<ConfidenceSet> sets;
  std::vector<std::pair<double, double>> quantile_bootstrap;
};

class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const LossModel& model() const noexcept { return *model_; }
  std::vector<ProfileGrid> grids() const;

  ObservedData simulate_data(const Parallelism& parallelism = {}) const;
  ObservedData load_data(const std::filesystem::path& path) const;
  void save_data(const std::filesystem::path& path, const ObservedData& data) const;
  /// data.txt for count data, data.csv for lifetimes.
  std::string data_file_name() const;

  Objective observed_loss(const ObservedData& data) const;

  /// MGLE and every profile; a profile point that beats the MGLE replaces it.
  ProfileStage profile(const Objective& loss, const Parallelism& parallelism = {}) const;
  CalibrationStage calibrate(const ProfileStage& stage, const Parallelism& parallelism = {}) const;
  /// One report per (validation parameter, profile), parameter-major. `calibration`
  /// supplies delta* unless the coverage spec fixes it.
  std::vector<CoverageReport> coverage(const CalibrationStage* calibration,
                                       const Parallelism& parallelism = {}) const;

 private:
  ExperimentConfig config_;
  std::unique_ptr<LossModel> model_;
};

}  // namespace glp
