#include "glp/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "glp/errors.hpp"
#include "glp/stats.hpp"

namespace glp {
namespace {

std::size_t covered_count(std::span<const double> sorted_gaps, double delta, double tau) {
  // delta * gap is non-decreasing in gap, so the covered replicates form a prefix.
  const auto it = std::partition_point(sorted_gaps.begin(), sorted_gaps.end(),
                                       [&](double gap) { return delta * gap <= tau; });
  return static_cast<std::size_t>(it - sorted_gaps.begin());
}

void check_excluded(std::size_t excluded, std::size_t total, double max_fraction, const char* what) {
  if (static_cast<double>(excluded) > max_fraction * static_cast<double>(total)) {
    throw CalibrationError(std::string(what) + ": " + std::to_string(excluded) + " of " + std::to_string(total) +
                           " replicates failed to converge");
  }
}

// Re-polishes a replicate MGLE when a profile solve found a lower loss.
void absorb_better_point(const Objective& loss, const ParameterSpace& space, const InterestPartition& partition,
                         std::span<const double> phi, const ProfilePoint& point, const OptimizerConfig& optimizer,
                         OptimResult& mgle) {
  if (!(point.value < mgle.value - optimizer.f_tol)) return;
  const ParameterVector theta = partition.compose(phi, point.nuisance);
  OptimResult polished = minimize_loss(loss, space, theta, optimizer);
  if (polished.value <= point.value) {
    polished.converged = polished.converged || mgle.converged;
    mgle = std::move(polished);
  } else {
    mgle.argmin = theta;
    mgle.value = point.value;
  }
}

// Replicate MGLE from the box midpoint, plus one extra start at the parameter
// that generated the replicate.
OptimResult fit_replicate_mgle(const Objective& loss, const ParameterSpace& space, const ParameterVector& generating,
                               const OptimizerConfig& optimizer) {
  OptimResult best = fit_mgle(loss, space, optimizer);
  OptimResult alt = minimize_loss(loss, space, generating, optimizer);
  if (alt.value < best.value - optimizer.f_tol) {
    alt.evals += best.evals;
    return alt;
  }
  best.evals += alt.evals;
  return best;
}

}  // namespace

void CalibrationConfig::validate() const {
  if (K < 1) throw InvalidInput("CalibrationConfig: K must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("CalibrationConfig: alpha must lie in (0, 1)");
  if (!(delta_step > 0.0)) throw InvalidInput("CalibrationConfig: delta_step must be positive");
  if (delta_grid_cap < 1) throw InvalidInput("CalibrationConfig: delta_grid_cap must be positive");
  if (!(max_excluded_fraction >= 0.0 && max_excluded_fraction <= 1.0))
    throw InvalidInput("CalibrationConfig: max_excluded_fraction must lie in [0, 1]");
}

std::vector<double> CalibrationResult::gaps() const {
  std::vector<double> out;
  for (std::size_t k = 0; k < bootstrap_mgle_losses.size(); ++k)
    if (!excluded[k]) out.push_back(bootstrap_profile_at_phi_hat[k] - bootstrap_mgle_losses[k]);
  return out;
}

double wilks_threshold(double alpha, int interest_dim) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("wilks_threshold: alpha must lie in (0, 1)");
  if (interest_dim < 1) throw InvalidInput("wilks_threshold: interest dimension must be positive");
  return 0.5 * chi2_quantile(1.0 - alpha, interest_dim);
}

double empirical_coverage_at(double delta, double tau_alpha, std::span<const double> phi_hat_profile_losses,
                             std::span<const double> mgle_losses) {
  if (phi_hat_profile_losses.size() != mgle_losses.size())
    throw InvalidInput("empirical_coverage_at: length mismatch");
  if (phi_hat_profile_losses.empty()) throw InvalidInput("empirical_coverage_at: no replicates");
  if (!(delta > 0.0)) throw InvalidInput("empirical_coverage_at: delta must be positive");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < mgle_losses.size(); ++k)
    if (delta * (phi_hat_profile_losses[k] - mgle_losses[k]) <= tau_alpha) ++hits;
  return static_cast<double>(hits) / static_cast<double>(mgle_losses.size());
}

DeltaSearch search_delta(std::span<const double> profile_losses, std::span<const double> mgle_losses,
                         double tau_alpha, const CalibrationConfig& config) {
  config.validate();
  if (profile_losses.size() != mgle_losses.size()) throw InvalidInput("search_delta: length mismatch");
  if (profile_losses.empty()) throw InvalidInput("search_delta: no replicates");

  std::vector<double> gaps(profile_losses.size());
  for (std::size_t k = 0; k < gaps.size(); ++k) gaps[k] = profile_losses[k] - mgle_losses[k];
  std::sort(gaps.begin(), gaps.end());
  const double K = static_cast<double>(gaps.size());
  const double target = 1.0 - config.alpha;
  const double stop_below = target - 0.1;

  DeltaSearch out;
  double best_err = std::numeric_limits<double>::infinity();
  bool ever_below_one = false;
  const std::size_t limit = config.delta_grid_size > 0 ? config.delta_grid_size : config.delta_grid_cap;
  for (std::size_t i = 1; i <= limit; ++i) {
    const double delta = static_cast<double>(i) * config.delta_step;
    const double coverage = static_cast<double>(covered_count(gaps, delta, tau_alpha)) / K;
    out.curve.push_back({delta, coverage});
    if (coverage < 1.0) ever_below_one = true;
    const double err = std::abs(coverage - target);
    if (err < best_err) {
      best_err = err;
      out.delta_star = delta;
      out.achieved_coverage = coverage;
    }
    if (config.delta_grid_size == 0 && (coverage < stop_below || coverage == 0.0)) break;
  }
  if (!ever_below_one) {
    out.delta_star = out.curve.back().delta;
    out.achieved_coverage = 1.0;
  }
  return out;
}

std::vector<CalibrationResult> calibrate_from_mgle(const LossModel& model, const OptimResult& mgle,
                                                   std::span<const ProfileGrid> grids,
                                                   const CalibrationConfig& config,
                                                   const OptimizerConfig& optimizer,
                                                   const Parallelism& parallelism) {
  config.validate();
  const ParameterSpace& space = model.space();
  optimizer.validate(space.dim());
  if (grids.empty()) throw InvalidInput("calibrate_from_mgle: no interest sets");
  if (!space.contains(mgle.argmin)) throw InvalidInput("calibrate_from_mgle: MGLE outside the parameter box");
  for (const auto& g : grids)
    if (g.partition.dim() != space.dim()) throw InvalidInput("calibrate_from_mgle: grid does not match model");

  const std::size_t K = static_cast<std::size_t>(config.K);
  const std::size_t G = grids.size();

  struct Replicate {
    OptimResult mgle;
    std::vector<ProfilePoint> points;  // per grid
    std::vector<ProfileCurve> profiles;
  };
  std::vector<Replicate> replicates(K);
  const RngStream master(config.seed);

  for_each_index(K, parallelism, [&](std::size_t k) {
    Replicate& rep = replicates[k];
    const Objective loss = model.simulate_loss(mgle.argmin, master.split(k));
    rep.mgle = fit_replicate_mgle(loss, space, mgle.argmin, optimizer);
    rep.points.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
      const auto& partition = grids[g].partition;
      const ParameterVector phi_hat = partition.interest_of(mgle.argmin);
      rep.points[g] = profile_loss_at(loss, space, partition, phi_hat, optimizer,
                                      partition.nuisance().empty()
                                          ? std::nullopt
                                          : std::optional(partition.nuisance_of(rep.mgle.argmin)));
      absorb_better_point(loss, space, partition, phi_hat, rep.points[g], optimizer, rep.mgle);
    }
    if (config.full_bootstrap_profiles) {
      for (std::size_t g = 0; g < G; ++g)
        rep.profiles.push_back(evaluate_profile(loss, space, grids[g], rep.mgle, optimizer,
                                                ProfileOptions{true, {Execution::serial, 1}}));
    }
  });

  std::vector<CalibrationResult> results;
  for (std::size_t g = 0; g < G; ++g) {
    CalibrationResult r{grids[g].partition, mgle.argmin, mgle.value};
    r.tau_alpha = wilks_threshold(config.alpha, static_cast<int>(grids[g].partition.interest_dim()));
    std::vector<double> kept_profile, kept_mgle;
    std::size_t excluded = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const Replicate& rep = replicates[k];
      const bool bad = !rep.mgle.converged || !rep.points[g].converged;
      r.bootstrap_mgles.push_back(rep.mgle.argmin);
      r.bootstrap_mgle_losses.push_back(rep.mgle.value);
      r.bootstrap_profile_at_phi_hat.push_back(rep.points[g].value);
      r.excluded.push_back(bad);
      if (bad) {
        ++excluded;
        continue;
      }
      kept_profile.push_back(rep.points[g].value);
      kept_mgle.push_back(rep.mgle.value);
      if (config.full_bootstrap_profiles) r.bootstrap_profiles.push_back(rep.profiles[g]);
    }
    check_excluded(excluded, K, config.max_excluded_fraction, "calibrate_delta");
    if (kept_profile.empty()) throw CalibrationError("calibrate_delta: no usable bootstrap replicates");
    r.K_effective = kept_profile.size();

    DeltaSearch search = search_delta(kept_profile, kept_mgle, r.tau_alpha, config);
    r.delta_star = search.delta_star;
    r.achieved_coverage = search.achieved_coverage;
    r.coverage_curve = std::move(search.curve);
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<double> delta_star_per_alpha(const CalibrationResult& calibration, std::span<const double> alphas,
                                         const CalibrationConfig& config) {
  std::vector<double> profile, mgle;
  for (std::size_t k = 0; k < calibration.excluded.size(); ++k) {
    if (calibration.excluded[k]) continue;
    profile.push_back(calibration.bootstrap_profile_at_phi_hat[k]);
    mgle.push_back(calibration.bootstrap_mgle_losses[k]);
  }
  if (profile.empty()) throw CalibrationError("delta_star_per_alpha: no usable bootstrap replicates");
  const int dim = static_cast<int>(calibration.partition.interest_dim());
  std::vector<double> out;
  for (double a : alphas) {
    CalibrationConfig level = config;
    level.alpha = a;
    out.push_back(search_delta(profile, mgle, wilks_threshold(a, dim), level).delta_star);
  }
  return out;
}

CalibrationResult calibrate_delta(const LossModel& model, const Objective& observed_loss, const ProfileGrid& grid,
                                  const CalibrationConfig& config, const OptimizerConfig& optimizer,
                                  const Parallelism& parallelism) {
  const ParameterSpace& space = model.space();
  const OptimResult fitted = fit_mgle(observed_loss, space, optimizer);
  ProfileCurve profile = evaluate_profile(observed_loss, space, grid, fitted, optimizer,
                                          ProfileOptions{true, parallelism});
  OptimResult mgle = fitted;
  mgle.argmin = profile.mgle;
  mgle.value = profile.mgle_loss;
  auto results = calibrate_from_mgle(model, mgle, std::span(&grid, 1), config, optimizer, parallelism);
  results.front().observed_profile = std::move(profile);
  return std::move(results.front());
}

ConfidenceSet confidence_set(const ProfileCurve& profile, double delta_star, double tau_alpha) {
  if (profile.grid.partition.interest_dim() != 1)
    throw InvalidInput("confidence_set: needs one interest parameter");
  if (!(delta_star > 0.0)) throw InvalidInput("confidence_set: delta must be positive");
  const std::vector<double> phi = profile.grid.values();
  const std::size_t M = phi.size();

  // s_j < 0 inside the set: log G(phi_j; delta) > c*.
  std::vector<double> s(M);
  ConfidenceSet set;
  for (std::size_t j = 0; j < M; ++j) {
    s[j] = delta_star * (profile.profile_loss[j] - profile.mgle_loss) - tau_alpha;
    if (s[j] < 0.0) set.grid_members.push_back(j);
  }
  if (set.grid_members.empty()) {
    const double phi_hat = profile.grid.partition.interest_of(profile.mgle)[0];
    set.lower = set.upper = phi_hat;
    return set;
  }

  auto crossing = [&](std::size_t in, std::size_t out) {
    const double frac = -s[in] / (s[out] - s[in]);
    return phi[in] + frac * (phi[out] - phi[in]);
  };
  const std::size_t lo = set.grid_members.front();
  const std::size_t hi = set.grid_members.back();
  set.hit_lower_bound = lo == 0;
  set.hit_upper_bound = hi == M - 1;
  set.lower = set.hit_lower_bound ? phi.front() : crossing(lo, lo - 1);
  set.upper = set.hit_upper_bound ? phi.back() : crossing(hi, hi + 1);
  return set;
}

std::vector<CoverageReport> validate_coverage(const LossModel& model, std::span<const double> theta_true,
                                              std::span<const CoverageTarget> targets,
                                              std::span<const double> alphas, std::size_t B,
                                              const OptimizerConfig& optimizer, std::uint64_t seed,
                                              const Parallelism& parallelism, double max_excluded_fraction) {
  const ParameterSpace& space = model.space();
  optimizer.validate(space.dim());
  if (B < 1) throw InvalidInput("validate_coverage: B must be at least 1");
  if (!space.contains(theta_true)) throw InvalidInput("validate_coverage: theta_true outside the parameter box");
  if (targets.empty() || alphas.empty()) throw InvalidInput("validate_coverage: nothing to validate");
  for (const auto& t : targets) {
    if (!(t.delta_star > 0.0)) throw InvalidInput("validate_coverage: delta_star must be positive");
    if (!t.per_alpha_deltas.empty() && t.per_alpha_deltas.size() != alphas.size())
      throw InvalidInput("validate_coverage: need one delta per alpha");
    for (double d : t.per_alpha_deltas)
      if (!(d > 0.0)) throw InvalidInput("validate_coverage: delta_star must be positive");
    if (t.partition.dim() != space.dim()) throw InvalidInput("validate_coverage: partition does not match model");
  }
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw InvalidInput("validate_coverage: alpha must lie in (0, 1)");

  const std::size_t T = targets.size();
  struct Replicate {
    OptimResult mgle;
    std::vector<ProfilePoint> points;
  };
  std::vector<Replicate> replicates(B);
  const RngStream master(seed);
  const ParameterVector truth(theta_true.begin(), theta_true.end());

  for_each_index(B, parallelism, [&](std::size_t b) {
    Replicate& rep = replicates[b];
    const Objective loss = model.simulate_loss(truth, master.split(b));
    rep.mgle = fit_replicate_mgle(loss, space, truth, optimizer);
    rep.points.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& partition = targets[t].partition;
      const ParameterVector phi_true = partition.interest_of(truth);
      rep.points[t] = profile_loss_at(loss, space, partition, phi_true, optimizer,
                                      partition.nuisance().empty()
                                          ? std::nullopt
                                          : std::optional(partition.nuisance_of(rep.mgle.argmin)));
      absorb_better_point(loss, space, partition, phi_true, rep.points[t], optimizer, rep.mgle);
    }
  });

  std::vector<CoverageReport> reports;
  for (std::size_t t = 0; t < T; ++t) {
    CoverageReport report{truth, targets[t].partition, targets[t].delta_star, B};
    report.alphas.assign(alphas.begin(), alphas.end());
    for (double a : alphas)
      report.taus.push_back(wilks_threshold(a, static_cast<int>(targets[t].partition.interest_dim())));
    report.deltas = targets[t].per_alpha_deltas.empty() ? std::vector<double>(alphas.size(), targets[t].delta_star)
                                                        : targets[t].per_alpha_deltas;
    std::vector<std::size_t> hits(alphas.size(), 0);
    for (std::size_t b = 0; b < B; ++b) {
      const Replicate& rep = replicates[b];
      const bool bad = !rep.mgle.converged || !rep.points[t].converged;
      const double gap = rep.points[t].value - rep.mgle.value;
      report.excluded.push_back(bad);
      report.profile_gaps.push_back(gap);
      std::vector<bool> flags(alphas.size(), false);
      if (!bad) {
        for (std::size_t a = 0; a < alphas.size(); ++a) {
          flags[a] = report.deltas[a] * gap <= report.taus[a];
          if (flags[a]) ++hits[a];
        }
      }
      report.per_replicate_flags.push_back(std::move(flags));
    }
    const std::size_t excluded = static_cast<std::size_t>(std::count(report.excluded.begin(), report.excluded.end(), true));
    check_excluded(excluded, B, max_excluded_fraction, "validate_coverage");
    report.B_effective = B - excluded;
    if (report.B_effective == 0) throw CalibrationError("validate_coverage: no usable replicates");
    for (std::size_t a = 0; a < alphas.size(); ++a)
      report.observed.push_back(static_cast<double>(hits[a]) / static_cast<double>(report.B_effective));
    reports.push_back(std::move(report));
  }
  return reports;
}

CoverageReport validate_coverage(const LossModel& model, std::span<const double> theta_true,
                                 const InterestPartition& partition, double delta_star,
                                 std::span<const double> alphas, std::size_t B, const OptimizerConfig& optimizer,
                                 std::uint64_t seed, const Parallelism& parallelism) {
  const CoverageTarget target{partition, delta_star};
  return std::move(validate_coverage(model, theta_true, std::span(&target, 1), alphas, B, optimizer, seed,
                                     parallelism)
                       .front());
}

std::pair<double, double> quantile_bootstrap_ci(std::span<const ParameterVector> mgle_samples, double alpha,
                                                std::size_t component) {
  if (mgle_samples.empty()) throw InvalidInput("quantile_bootstrap_ci: empty sample");
  if (mgle_samples.size() < 2) throw InvalidInput("quantile_bootstrap_ci: need at least two samples");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("quantile_bootstrap_ci: alpha must lie in (0, 1]");
  std::vector<double> values;
  values.reserve(mgle_samples.size());
  for (const auto& s : mgle_samples) {
    if (component >= s.size()) throw InvalidInput("quantile_bootstrap_ci: component out of range");
    values.push_back(s[component]);
  }
  return {empirical_quantile(values, alpha / 2.0), empirical_quantile(values, 1.0 - alpha / 2.0)};
}

}  // namespace glp
