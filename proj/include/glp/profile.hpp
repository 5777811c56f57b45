#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "glp/optim.hpp"
#include "glp/parallel.hpp"
#include "glp/space.hpp"
#include "glp/stats.hpp"

namespace glp {

/// Log of the generalised likelihood exp(-delta * loss).
double generalised_log_likelihood(double loss_value, double delta);

/// A simulable data-generating process paired with a deterministic loss.
///
/// Implementations draw a dataset from p(.|theta) with the given stream and
/// return the loss bound to it. Both steps must be deterministic in their
/// inputs; the returned objective must be safe to call concurrently.
class LossModel {
 public:
  virtual ~LossModel() = default;
  virtual const ParameterSpace& space() const = 0;
  virtual Objective simulate_loss(std::span<const double> theta, RngStream stream) const = 0;
};

/// Interest-parameter grid. One-dimensional grids are regular.
struct ProfileGrid {
  InterestPartition partition;
  std::vector<ParameterVector> points;

  /// phi_j = lower + j (upper - lower) / (M - 1), j = 0..M-1.
  static ProfileGrid regular(const InterestPartition& partition, double lower, double upper, std::size_t M);
  /// Regular grid spanning the interest coordinate's box bounds.
  static ProfileGrid regular(const ParameterSpace& space, const InterestPartition& partition, std::size_t M);

  std::size_t resolution() const noexcept { return points.size(); }
  /// Scalar grid values; requires a one-dimensional interest set.
  std::vector<double> values() const;
};

/// Profile loss over a grid in the delta = 1 representation.
struct ProfileCurve {
  ProfileGrid grid;
  std::vector<double> profile_loss;
  std::vector<ParameterVector> minimizers;  // nuisance coordinates per grid point
  std::vector<bool> converged;
  ParameterVector mgle;
  double mgle_loss = 0.0;

  /// log G(y, phi_j; delta) = -delta * profile_loss[j].
  std::vector<double> log_generalised_likelihood(double delta) const;
  std::size_t nearest_to_mgle() const;
};

struct ProfileOptions {
  bool warm_start = true;
  Parallelism parallelism{};
};

struct ProfilePoint {
  double value = 0.0;
  ParameterVector nuisance;
  bool converged = true;
  int evals = 0;
};

/// Maximum generalised likelihood estimate: minimizer of the loss over the box,
/// started at the box midpoint.
OptimResult fit_mgle(const Objective& loss, const ParameterSpace& space, const OptimizerConfig& config);

/// Loss minimized over the nuisance coordinates at one interest value.
/// `start_nuisance` defaults to the nuisance box midpoint.
ProfilePoint profile_loss_at(const Objective& loss, const ParameterSpace& space, const InterestPartition& partition,
                             std::span<const double> phi, const OptimizerConfig& config,
                             std::optional<ParameterVector> start_nuisance = std::nullopt);

/// Profile over every grid point, warm-started outward from the node nearest
/// the MGLE. If a grid point beats the supplied MGLE by more than f_tol the
/// MGLE is re-polished from that point.
ProfileCurve evaluate_profile(const Objective& loss, const ParameterSpace& space, const ProfileGrid& grid,
                              const OptimResult& mgle, const OptimizerConfig& config,
                              const ProfileOptions& options = {});

ProfileCurve evaluate_profile(const Objective& loss, const ParameterSpace& space, const ProfileGrid& grid,
                              const OptimizerConfig& config, const ProfileOptions& options = {});

}  // namespace glp
