#include "glp/experiment.hpp"

#include <algorithm>
#include <iterator>

#include "glp/errors.hpp"

namespace glp {
namespace {

std::unique_ptr<LossModel> make_model(const ExperimentConfig& config) {
  if (config.model == ModelKind::cmp) return std::make_unique<cmp::CmpModel>(config.n, config.space);
  return std::make_unique<rw::RandomWalkModel>(config.walk, config.space);
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(ModelKind model) {
  ExperimentConfig c;
  c.model = model;
  if (model == ModelKind::cmp) {
    c.true_params = {4.0, 2.0};
    c.space = cmp::cmp_parameter_space();
  } else {
    c.true_params = {0.001, 0.5};
    c.space = rw::random_walk_parameter_space();
  }
  for (const auto& name : c.space.names()) c.profiles.push_back({name, 100, std::nullopt});
  return c;
}

void ExperimentConfig::validate() const {
  if (space.dim() != 2) throw InvalidInput("config: both models have two free parameters");
  if (true_params.size() != space.dim() || !space.contains(true_params))
    throw InvalidInput("config: true_params must lie inside parameter_bounds");
  if (model == ModelKind::cmp) {
    if (n < 1) throw InvalidInput("config: sample.n must be at least 1");
    if (!(space.lower()[0] > 0.0) || !(space.lower()[1] > 0.0))
      throw InvalidInput("config: CMP bounds must be positive");
  } else {
    walk.validate();
    if (space.lower()[0] < 0.0 || space.upper()[0] > 1.0 || space.lower()[1] < 0.0 || space.upper()[1] > 1.0)
      throw InvalidInput("config: random-walk bounds must lie in [0, 1]");
  }
  if (profiles.empty()) throw InvalidInput("config: no profiles requested");
  for (const auto& p : profiles) {
    const std::size_t i = space.index_of(p.interest);
    if (p.M < 2) throw InvalidInput("config: profile M must be at least 2");
    if (p.range) {
      const auto [lo, hi] = *p.range;
      if (!(lo < hi) || lo < space.lower()[i] || hi > space.upper()[i])
        throw InvalidInput("config: profile range for " + p.interest + " must be increasing and inside its bounds");
    }
  }
  calibration.validate();
  optimizer.validate(space.dim());
  for (double a : coverage.alphas)
    if (!(a > 0.0 && a < 1.0)) throw InvalidInput("config: coverage alphas must lie in (0, 1)");
  for (const auto& t : coverage.theta_true)
    if (t.size() != space.dim() || !space.contains(t))
      throw InvalidInput("config: coverage.theta_true entries must lie inside parameter_bounds");
  if (!coverage.delta_star.empty()) {
    if (coverage.delta_star.size() != profiles.size())
      throw InvalidInput("config: coverage.delta_star needs one value per profile");
    for (double d : coverage.delta_star)
      if (!(d > 0.0)) throw InvalidInput("config: coverage.delta_star must be positive");
    if (coverage.per_alpha) throw InvalidInput("config: coverage.per_alpha needs a calibration, not fixed delta_star");
  }
}

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  model_ = make_model(config_);
}

std::vector<ProfileGrid> Experiment::grids() const {
  std::vector<ProfileGrid> out;
  const auto& space = config_.space;
  for (const auto& p : config_.profiles) {
    const std::size_t i = space.index_of(p.interest);
    const InterestPartition partition(space.dim(), {i});
    const auto [lo, hi] = p.range.value_or(std::pair{space.lower()[i], space.upper()[i]});
    out.push_back(ProfileGrid::regular(partition, lo, hi, p.M));
  }
  return out;
}

std::string Experiment::data_file_name() const {
  return config_.model == ModelKind::cmp ? "data.txt" : "data.csv";
}

ObservedData Experiment::simulate_data(const Parallelism& parallelism) const {
  const RngStream stream = RngStream(config_.seed).split(0);
  if (config_.model == ModelKind::cmp) {
    RngStream s = stream;
    return static_cast<const cmp::CmpModel&>(*model_).simulate(config_.true_params, s);
  }
  return static_cast<const rw::RandomWalkModel&>(*model_).simulate(config_.true_params, stream, parallelism);
}

ObservedData Experiment::load_data(const std::filesystem::path& path) const {
  if (config_.model == ModelKind::cmp) {
    cmp::CountDataset data = cmp::read_counts(path);
    if (data.size() != config_.n)
      throw InvalidInput("data file has " + std::to_string(data.size()) + " counts but sample.n is " +
                         std::to_string(config_.n));
    return data;
  }
  rw::LifetimeDataset data = rw::read_lifetimes(path);
  if (data.positions() != config_.walk.release_sites() || data.m() != config_.walk.m)
    throw InvalidInput("lifetime file does not match sample.positions and sample.m");
  return data;
}

void Experiment::save_data(const std::filesystem::path& path, const ObservedData& data) const {
  if (const auto* counts = std::get_if<cmp::CountDataset>(&data)) {
    cmp::write_counts(path, *counts);
  } else {
    rw::write_lifetimes(path, std::get<rw::LifetimeDataset>(data));
  }
}

Objective Experiment::observed_loss(const ObservedData& data) const {
  if (const auto* counts = std::get_if<cmp::CountDataset>(&data)) return cmp::dfd_objective(*counts);
  return static_cast<const rw::RandomWalkModel&>(*model_).bind(std::get<rw::LifetimeDataset>(data),
                                                                RngStream(config_.seed).split(1));
}

ProfileStage Experiment::profile(const Objective& loss, const Parallelism& parallelism) const {
  ProfileStage stage;
  stage.mgle = fit_mgle(loss, config_.space, config_.optimizer);
  for (const auto& grid : grids()) {
    ProfileCurve curve = evaluate_profile(loss, config_.space, grid, stage.mgle, config_.optimizer,
                                          ProfileOptions{true, parallelism});
    if (curve.mgle_loss < stage.mgle.value) {
      stage.mgle.argmin = curve.mgle;
      stage.mgle.value = curve.mgle_loss;
    }
    stage.curves.push_back(std::move(curve));
  }
  for (auto& curve : stage.curves) {
    curve.mgle = stage.mgle.argmin;
    curve.mgle_loss = stage.mgle.value;
  }
  return stage;
}

CalibrationStage Experiment::calibrate(const ProfileStage& stage, const Parallelism& parallelism) const {
  CalibrationConfig cal = config_.calibration;
  cal.seed = RngStream(config_.seed).split(2)();
  const auto g = grids();
  CalibrationStage out;
  out.results = calibrate_from_mgle(*model_, stage.mgle, g, cal, config_.optimizer, parallelism);
  for (std::size_t i = 0; i < out.results.size(); ++i) {
    CalibrationResult& r = out.results[i];
    r.observed_profile = stage.curves[i];
    out.sets.push_back(confidence_set(stage.curves[i], r.delta_star, r.tau_alpha));
    std::vector<ParameterVector> kept;
    for (std::size_t k = 0; k < r.bootstrap_mgles.size(); ++k)
      if (!r.excluded[k]) kept.push_back(r.bootstrap_mgles[k]);
    out.quantile_bootstrap.push_back(quantile_bootstrap_ci(kept, cal.alpha, r.partition.interest().front()));
  }
  return out;
}

std::vector<CoverageReport> Experiment::coverage(const CalibrationStage* calibration,
                                                 const Parallelism& parallelism) const {
  const CoverageSpec& spec = config_.coverage;
  if (spec.B < 1) throw InvalidInput("coverage: B must be at least 1");
  if (spec.delta_star.empty() && calibration == nullptr)
    throw InvalidInput("coverage: needs a calibration or coverage.delta_star");

  const auto g = grids();
  std::vector<CoverageTarget> targets;
  for (std::size_t i = 0; i < g.size(); ++i) {
    CoverageTarget t{g[i].partition, 0.0, {}};
    if (!spec.delta_star.empty()) {
      t.delta_star = spec.delta_star[i];
    } else {
      const CalibrationResult& r = calibration->results.at(i);
      t.delta_star = r.delta_star;
      if (spec.per_alpha) t.per_alpha_deltas = delta_star_per_alpha(r, spec.alphas, config_.calibration);
    }
    targets.push_back(std::move(t));
  }

  const std::vector<ParameterVector> thetas =
      spec.theta_true.empty() ? std::vector<ParameterVector>{config_.true_params} : spec.theta_true;
  const RngStream root = RngStream(config_.seed).split(3);
  std::vector<CoverageReport> out;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    auto reports = validate_coverage(*model_, thetas[i], targets, spec.alphas, spec.B, config_.optimizer,
                                     root.split(i)(), parallelism, config_.calibration.max_excluded_fraction);
    std::move(reports.begin(), reports.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace glp
