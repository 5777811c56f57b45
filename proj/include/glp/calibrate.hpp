#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "glp/optim.hpp"
#include "glp/parallel.hpp"
#include "glp/profile.hpp"

namespace glp {

struct CalibrationConfig {
  int K = 100;
  double alpha = 0.05;
  double delta_step = 0.01;
  std::size_t delta_grid_size = 0;  // 0: extend until coverage < 1 - alpha - 0.1
  std::size_t delta_grid_cap = 1'000'000;
  std::uint64_t seed = 1;
  double max_excluded_fraction = 0.2;
  bool full_bootstrap_profiles = false;

  void validate() const;
};

struct CoveragePoint {
  double delta;
  double coverage;
};

struct CalibrationResult {
  InterestPartition partition;
  ParameterVector mgle;
  double mgle_loss = 0.0;
  double tau_alpha = 0.0;
  double delta_star = 0.0;
  double achieved_coverage = 1.0;
  std::vector<CoveragePoint> coverage_curve;

  // Per bootstrap replicate k = 0..K-1; excluded replicates keep their slot.
  std::vector<ParameterVector> bootstrap_mgles;
  std::vector<double> bootstrap_mgle_losses;
  std::vector<double> bootstrap_profile_at_phi_hat;
  std::vector<bool> excluded;
  std::size_t K_effective = 0;

  std::optional<ProfileCurve> observed_profile;
  std::vector<ProfileCurve> bootstrap_profiles;  // only with full_bootstrap_profiles

  /// profile_at_phi_hat - mgle_loss per retained replicate.
  std::vector<double> gaps() const;
};

struct ConfidenceSet {
  std::vector<std::size_t> grid_members;
  double lower = 0.0;
  double upper = 0.0;
  bool hit_lower_bound = false;
  bool hit_upper_bound = false;

  bool contains(double phi) const { return phi >= lower && phi <= upper; }
};

struct CoverageReport {
  ParameterVector theta_true;
  InterestPartition partition;
  double delta_star = 0.0;
  std::size_t B = 0;
  std::size_t B_effective = 0;
  std::vector<double> alphas;
  std::vector<double> taus;
  std::vector<double> deltas;  // per alpha
  std::vector<double> observed;
  std::vector<std::vector<bool>> per_replicate_flags;  // [b][alpha]
  std::vector<bool> excluded;
  std::vector<double> profile_gaps;  // profile(phi_true) - mgle loss, per replicate
};

struct CoverageTarget {
  InterestPartition partition;
  double delta_star;
  std::vector<double> per_alpha_deltas;  // empty: delta_star at every level
};

/// Half the (1 - alpha) chi-squared quantile with interest_dim degrees of freedom.
double wilks_threshold(double alpha, int interest_dim);

/// Fraction of replicates k with -delta * profile_k >= -tau - delta * mgle_k.
double empirical_coverage_at(double delta, double tau_alpha, std::span<const double> phi_hat_profile_losses,
                             std::span<const double> mgle_losses);

struct DeltaSearch {
  double delta_star = 0.0;
  double achieved_coverage = 1.0;
  std::vector<CoveragePoint> curve;
};

/// Grid search of delta over {step, 2 step, ...} minimizing |C(delta) - (1 - alpha)|.
/// Ties go to the smaller delta; a curve that never leaves 1 returns its last node.
DeltaSearch search_delta(std::span<const double> profile_losses, std::span<const double> mgle_losses,
                         double tau_alpha, const CalibrationConfig& config);

/// Bootstrap calibration for several interest sets sharing one set of K
/// bootstrap datasets drawn at the supplied MGLE.
std::vector<CalibrationResult> calibrate_from_mgle(const LossModel& model, const OptimResult& mgle,
                                                   std::span<const ProfileGrid> grids,
                                                   const CalibrationConfig& config,
                                                   const OptimizerConfig& optimizer,
                                                   const Parallelism& parallelism = {});

/// delta* re-searched at each alpha over the retained bootstrap replicates
/// of an existing calibration.
std::vector<double> delta_star_per_alpha(const CalibrationResult& calibration, std::span<const double> alphas,
                                         const CalibrationConfig& config);

/// Full calibration: MGLE and observed profile, then bootstrap calibration.
CalibrationResult calibrate_delta(const LossModel& model, const Objective& observed_loss, const ProfileGrid& grid,
                                  const CalibrationConfig& config, const OptimizerConfig& optimizer,
                                  const Parallelism& parallelism = {});

ConfidenceSet confidence_set(const ProfileCurve& profile, double delta_star, double tau_alpha);

std::vector<CoverageReport> validate_coverage(const LossModel& model, std::span<const double> theta_true,
                                              std::span<const CoverageTarget> targets,
                                              std::span<const double> alphas, std::size_t B,
                                              const OptimizerConfig& optimizer, std::uint64_t seed,
                                              const Parallelism& parallelism = {},
                                              double max_excluded_fraction = 0.2);

CoverageReport validate_coverage(const LossModel& model, std::span<const double> theta_true,
                                 const InterestPartition& partition, double delta_star,
                                 std::span<const double> alphas, std::size_t B, const OptimizerConfig& optimizer,
                                 std::uint64_t seed, const Parallelism& parallelism = {});

/// Empirical alpha/2 and 1 - alpha/2 quantiles of one MGLE component.
std::pair<double, double> quantile_bootstrap_ci(std::span<const ParameterVector> mgle_samples, double alpha,
                                                std::size_t component);

}  // namespace glp
