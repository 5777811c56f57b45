#include "glp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "glp/errors.hpp"
#include "glp/stats.hpp"

namespace glp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vertex {
  ParameterVector x;
  double f;
};

class Run {
 public:
  Run(const Objective& objective, const ParameterSpace& space, const OptimizerConfig& config,
      double* global_best, std::vector<double>* trace)
      : objective_(objective), space_(space), config_(config), global_best_(global_best), trace_(trace) {}

  // Nelder-Mead from `start`, whose value is already known.
  OptimResult operator()(const ParameterVector& start, double f_start) {
    const std::size_t n = space_.dim();
    const int budget = config_.evals_for(n);
    evals_ = 0;

    std::vector<Vertex> simplex;
    simplex.push_back({start, f_start});
    for (std::size_t i = 0; i < n; ++i) {
      ParameterVector x = start;
      const double step = config_.initial_simplex_scale * space_.width(i);
      x[i] = start[i] + step <= space_.upper()[i] ? start[i] + step : start[i] - step;
      x[i] = reflect_into(x[i], space_.lower()[i], space_.upper()[i]);
      simplex.push_back({x, eval(x)});
    }

    std::vector<std::size_t> order(n + 1);
    bool converged = false;
    for (;;) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return simplex[a].f < simplex[b].f; });
      std::vector<Vertex> sorted;
      sorted.reserve(n + 1);
      for (auto i : order) sorted.push_back(std::move(simplex[i]));
      simplex = std::move(sorted);
      record(simplex.front().f);

      if (stopped(simplex)) {
        converged = true;
        break;
      }
      if (evals_ >= budget) break;

      const Vertex& worst = simplex[n];
      ParameterVector centroid(n, 0.0);
      for (std::size_t v = 0; v < n; ++v)
        for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i];
      for (auto& c : centroid) c /= static_cast<double>(n);

      auto along = [&](double coeff, const ParameterVector& from) {
        ParameterVector x(n);
        for (std::size_t i = 0; i < n; ++i)
          x[i] = reflect_into(centroid[i] + coeff * (centroid[i] - from[i]), space_.lower()[i],
                              space_.upper()[i]);
        return x;
      };

      ParameterVector xr = along(1.0, worst.x);
      const double fr = eval(xr);
      if (fr < simplex[0].f) {
        ParameterVector xe = along(2.0, worst.x);
        const double fe = eval(xe);
        simplex[n] = fe < fr ? Vertex{std::move(xe), fe} : Vertex{std::move(xr), fr};
      } else if (fr < simplex[n - 1].f) {
        simplex[n] = {std::move(xr), fr};
      } else {
        bool accepted = false;
        if (fr < worst.f) {
          ParameterVector xc = along(0.5, worst.x);
          const double fc = eval(xc);
          if (fc <= fr) {
            simplex[n] = {std::move(xc), fc};
            accepted = true;
          }
        } else {
          ParameterVector xc = along(-0.5, worst.x);
          const double fc = eval(xc);
          if (fc < worst.f) {
            simplex[n] = {std::move(xc), fc};
            accepted = true;
          }
        }
        if (!accepted) {
          const ParameterVector best = simplex[0].x;
          for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t i = 0; i < n; ++i) simplex[v].x[i] = best[i] + 0.5 * (simplex[v].x[i] - best[i]);
            simplex[v].f = eval(simplex[v].x);
          }
        }
      }
    }

    OptimResult result;
    result.argmin = simplex.front().x;
    result.value = simplex.front().f;
    result.evals = evals_;
    result.converged = converged;
    return result;
  }

 private:
  double eval(const ParameterVector& x) {
    ++evals_;
    const double f = objective_(x);
    return std::isnan(f) ? kInf : f;
  }

  bool stopped(const std::vector<Vertex>& simplex) const {
    const double spread = simplex.back().f - simplex.front().f;
    if (spread <= config_.f_tol) return true;
    double extent = 0.0;
    for (std::size_t v = 1; v < simplex.size(); ++v)
      for (std::size_t i = 0; i < simplex[v].x.size(); ++i)
        extent = std::max(extent, std::abs(simplex[v].x[i] - simplex[0].x[i]));
    return extent <= config_.x_tol;
  }

  void record(double best) {
    if (best < *global_best_) *global_best_ = best;
    if (trace_) trace_->push_back(*global_best_);
  }

  const Objective& objective_;
  const ParameterSpace& space_;
  const OptimizerConfig& config_;
  double* global_best_;
  std::vector<double>* trace_;
  int evals_ = 0;
};

}  // namespace

void OptimizerConfig::validate(std::size_t dim) const {
  if (!(f_tol > 0.0) || !(x_tol > 0.0)) throw InvalidInput("OptimizerConfig: f_tol and x_tol must be positive");
  if (max_evals != 0 && max_evals < static_cast<int>(dim) + 1)
    throw InvalidInput("OptimizerConfig: max_evals must be at least dim + 1");
  if (max_evals < 0) throw InvalidInput("OptimizerConfig: max_evals must be non-negative");
  if (restarts < 0) throw InvalidInput("OptimizerConfig: restarts must be non-negative");
  if (!(initial_simplex_scale > 0.0)) throw InvalidInput("OptimizerConfig: initial_simplex_scale must be positive");
  if (!(restart_jitter >= 0.0)) throw InvalidInput("OptimizerConfig: restart_jitter must be non-negative");
}

double reflect_into(double x, double lower, double upper) {
  if (x >= lower && x <= upper) return x;
  if (!std::isfinite(x)) return x > upper ? upper : lower;
  const double width = upper - lower;
  double t = std::fmod(x - lower, 2.0 * width);
  if (t < 0.0) t += 2.0 * width;
  const double folded = t <= width ? lower + t : lower + (2.0 * width - t);
  return std::clamp(folded, lower, upper);
}

OptimResult minimize_loss(const Objective& objective, const ParameterSpace& space,
                          std::span<const double> start, const OptimizerConfig& config) {
  config.validate(space.dim());
  if (!space.contains(start)) throw InvalidInput("minimize_loss: start point outside the parameter box");
  const ParameterVector x0(start.begin(), start.end());
  const double f0 = objective(x0);
  if (std::isnan(f0)) throw InvalidInput("minimize_loss: objective is NaN at the start point");

  double global_best = kInf;
  std::vector<double> trace;
  Run run(objective, space, config, &global_best, config.record_trace ? &trace : nullptr);

  OptimResult best = run(x0, f0);
  int evals = best.evals + 1;

  RngStream jitter(config.jitter_seed);
  for (int r = 0; r < config.restarts; ++r) {
    ParameterVector x = best.argmin;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double half = config.restart_jitter * space.width(i);
      x[i] = reflect_into(x[i] + half * (2.0 * jitter.uniform() - 1.0), space.lower()[i], space.upper()[i]);
    }
    double fx = objective(x);
    if (std::isnan(fx)) fx = kInf;
    ++evals;
    OptimResult candidate = run(x, fx);
    evals += candidate.evals;
    if (candidate.value < best.value - config.f_tol) {
      best = std::move(candidate);
    } else if (candidate.converged && candidate.value <= best.value + config.f_tol) {
      best.converged = true;
    }
  }
  best.evals = evals;
  best.trace = std::move(trace);
  return best;
}

}  // namespace glp
