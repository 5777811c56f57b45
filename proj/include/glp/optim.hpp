#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glp/space.hpp"

namespace glp {

struct OptimizerConfig {
  int max_evals = 0;  // per simplex run; 0 selects 2000 * dim
  double f_tol = 1e-8;
  double x_tol = 1e-8;
  int restarts = 2;
  double initial_simplex_scale = 0.05;  // fraction of each box width
  double restart_jitter = 0.10;         // fraction of each box width
  std::uint64_t jitter_seed = 0x5eedULL;
  bool record_trace = false;

  int evals_for(std::size_t dim) const { return max_evals > 0 ? max_evals : 2000 * static_cast<int>(dim); }
  void validate(std::size_t dim) const;
};

struct OptimResult {
  ParameterVector argmin;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
  std::vector<double> trace;  // best-so-far after each iteration, when requested
};

/// Bounded Nelder-Mead with coordinate-wise reflection at the box faces.
///
/// A run stops when the simplex's value spread falls below f_tol or its
/// extent below x_tol. Restarts begin from the incumbent plus uniform jitter
/// and replace it only on an improvement larger than f_tol. NaN values count
/// as +inf, except at the start point where they are rejected.
OptimResult minimize_loss(const Objective& objective, const ParameterSpace& space,
                          std::span<const double> start, const OptimizerConfig& config);

/// Maps x into [lower, upper] by folding at the faces.
double reflect_into(double x, double lower, double upper);

}  // namespace glp
