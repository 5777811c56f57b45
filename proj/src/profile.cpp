#include "glp/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glp/errors.hpp"

namespace glp {

double generalised_log_likelihood(double loss_value, double delta) {
  if (!std::isfinite(loss_value)) throw InvalidInput("generalised_log_likelihood: loss must be finite");
  if (!(delta > 0.0)) throw InvalidInput("generalised_log_likelihood: delta must be positive");
  return -delta * loss_value;
}

ProfileGrid ProfileGrid::regular(const InterestPartition& partition, double lower, double upper, std::size_t M) {
  if (partition.interest_dim() != 1) throw InvalidInput("ProfileGrid::regular: needs one interest parameter");
  if (M < 2) throw InvalidInput("ProfileGrid::regular: need M >= 2");
  if (!(lower < upper)) throw InvalidInput("ProfileGrid::regular: need lower < upper");
  ProfileGrid grid{partition, {}};
  const double step = (upper - lower) / static_cast<double>(M - 1);
  grid.points.reserve(M);
  for (std::size_t j = 0; j + 1 < M; ++j) grid.points.push_back({std::min(lower + static_cast<double>(j) * step, upper)});
  grid.points.push_back({upper});
  return grid;
}

ProfileGrid ProfileGrid::regular(const ParameterSpace& space, const InterestPartition& partition, std::size_t M) {
  if (partition.dim() != space.dim()) throw InvalidInput("ProfileGrid::regular: partition does not match space");
  const auto i = partition.interest().at(0);
  return regular(partition, space.lower()[i], space.upper()[i], M);
}

std::vector<double> ProfileGrid::values() const {
  if (partition.interest_dim() != 1) throw InvalidInput("ProfileGrid::values: needs one interest parameter");
  std::vector<double> v;
  v.reserve(points.size());
  for (const auto& p : points) v.push_back(p[0]);
  return v;
}

std::vector<double> ProfileCurve::log_generalised_likelihood(double delta) const {
  std::vector<double> out;
  out.reserve(profile_loss.size());
  for (double l : profile_loss) out.push_back(generalised_log_likelihood(l, delta));
  return out;
}

std::size_t ProfileCurve::nearest_to_mgle() const {
  const auto phi_hat = grid.partition.interest_of(mgle);
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.points.size(); ++j) {
    double dist = 0.0;
    for (std::size_t i = 0; i < phi_hat.size(); ++i) dist += std::pow(grid.points[j][i] - phi_hat[i], 2);
    if (dist < best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

OptimResult fit_mgle(const Objective& loss, const ParameterSpace& space, const OptimizerConfig& config) {
  return minimize_loss(loss, space, space.midpoint(), config);
}

ProfilePoint profile_loss_at(const Objective& loss, const ParameterSpace& space, const InterestPartition& partition,
                             std::span<const double> phi, const OptimizerConfig& config,
                             std::optional<ParameterVector> start_nuisance) {
  if (partition.dim() != space.dim()) throw InvalidInput("profile_loss_at: partition does not match space");
  if (phi.size() != partition.interest_dim()) throw InvalidInput("profile_loss_at: wrong interest dimension");
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const auto idx = partition.interest()[i];
    if (!(phi[i] >= space.lower()[idx] && phi[i] <= space.upper()[idx]))
      throw InvalidInput("profile_loss_at: interest value outside its bounds");
  }

  const ParameterVector phi_v(phi.begin(), phi.end());
  ProfilePoint point;
  if (partition.nuisance().empty()) {
    point.value = loss(phi_v);
    point.evals = 1;
    return point;
  }

  const ParameterSpace nuisance_space = space.subspace(partition.nuisance());
  Objective inner = [&loss, &partition, phi_v, theta = ParameterVector(space.dim())](
                        std::span<const double> psi) mutable {
    partition.compose_into(phi_v, psi, theta);
    return loss(theta);
  };
  const ParameterVector start = start_nuisance ? *start_nuisance : nuisance_space.midpoint();
  OptimResult r = minimize_loss(inner, nuisance_space, start, config);
  point.value = r.value;
  point.nuisance = std::move(r.argmin);
  point.converged = r.converged;
  point.evals = r.evals;
  return point;
}

ProfileCurve evaluate_profile(const Objective& loss, const ParameterSpace& space, const ProfileGrid& grid,
                              const OptimResult& mgle, const OptimizerConfig& config, const ProfileOptions& options) {
  if (grid.partition.dim() != space.dim()) throw InvalidInput("evaluate_profile: grid does not match space");
  if (grid.resolution() < 2) throw InvalidInput("evaluate_profile: need at least two grid points");
  const auto& partition = grid.partition;
  const std::size_t M = grid.resolution();

  ProfileCurve curve{grid};
  curve.profile_loss.assign(M, 0.0);
  curve.minimizers.assign(M, {});
  curve.converged.assign(M, true);
  curve.mgle = mgle.argmin;
  curve.mgle_loss = mgle.value;

  std::vector<ProfilePoint> points(M);
  const ParameterVector psi_hat = partition.nuisance_of(mgle.argmin);
  auto solve = [&](std::size_t j, const ParameterVector& start) {
    points[j] = profile_loss_at(loss, space, partition, grid.points[j], config,
                                partition.nuisance().empty() ? std::nullopt : std::optional(start));
  };

  if (options.warm_start) {
    const std::size_t j0 = curve.nearest_to_mgle();
    // Each direction seeds its first node from the MGLE nuisance values, so
    // the two sweeps are independent.
    for_each_index(2, options.parallelism, [&](std::size_t direction) {
      ParameterVector seed = psi_hat;
      if (direction == 0) {
        for (std::size_t j = j0; j < M; ++j) {
          solve(j, seed);
          seed = points[j].nuisance;
        }
      } else {
        for (std::size_t j = j0; j-- > 0;) {
          solve(j, seed);
          seed = points[j].nuisance;
        }
      }
    });
  } else {
    for_each_index(M, options.parallelism, [&](std::size_t j) { solve(j, psi_hat); });
  }

  for (std::size_t j = 0; j < M; ++j) {
    curve.profile_loss[j] = points[j].value;
    curve.minimizers[j] = std::move(points[j].nuisance);
    curve.converged[j] = points[j].converged;
  }

  std::size_t jmin = 0;
  for (std::size_t j = 1; j < M; ++j)
    if (curve.profile_loss[j] < curve.profile_loss[jmin]) jmin = j;
  if (curve.profile_loss[jmin] < curve.mgle_loss - config.f_tol) {
    const ParameterVector theta = partition.nuisance().empty()
                                      ? grid.points[jmin]
                                      : partition.compose(grid.points[jmin], curve.minimizers[jmin]);
    const OptimResult polished = minimize_loss(loss, space, theta, config);
    curve.mgle = polished.argmin;
    curve.mgle_loss = std::min(polished.value, curve.profile_loss[jmin]);
    if (polished.value > curve.profile_loss[jmin]) curve.mgle = theta;
  }
  return curve;
}

ProfileCurve evaluate_profile(const Objective& loss, const ParameterSpace& space, const ProfileGrid& grid,
                              const OptimizerConfig& config, const ProfileOptions& options) {
  return evaluate_profile(loss, space, grid, fit_mgle(loss, space, config), config, options);
}

}  // namespace glp
