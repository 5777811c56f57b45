#include <doctest.h>

#include <filesystem>

#include "glp/errors.hpp"
#include "glp/experiment.hpp"

using namespace glp;

namespace {

ExperimentConfig small(ModelKind kind) {
  auto c = ExperimentConfig::defaults(kind);
  c.n = 300;
  c.walk.lattice = rw::Lattice{11};
  c.walk.m = 100;
  c.walk.variance_resamples = 20;
  for (auto& p : c.profiles) p.M = 10;
  c.calibration.K = 12;
  c.coverage.B = 6;
  c.coverage.alphas = {0.05, 0.5};
  return c;
}

// Every number the pipeline produces, in a fixed order.
std::vector<double> fingerprint(const Experiment& ex, const Parallelism& par) {
  std::vector<double> out;
  const auto data = ex.simulate_data(par);
  const auto stage = ex.profile(ex.observed_loss(data), par);
  out.insert(out.end(), stage.mgle.argmin.begin(), stage.mgle.argmin.end());
  for (const auto& c : stage.curves) out.insert(out.end(), c.profile_loss.begin(), c.profile_loss.end());
  const auto cal = ex.calibrate(stage, par);
  for (std::size_t i = 0; i < cal.results.size(); ++i) {
    const auto& r = cal.results[i];
    out.push_back(r.delta_star);
    out.insert(out.end(), r.bootstrap_profile_at_phi_hat.begin(), r.bootstrap_profile_at_phi_hat.end());
    out.push_back(cal.sets[i].lower);
    out.push_back(cal.sets[i].upper);
    out.push_back(cal.quantile_bootstrap[i].first);
    out.push_back(cal.quantile_bootstrap[i].second);
  }
  for (const auto& report : ex.coverage(&cal, par)) {
    out.insert(out.end(), report.observed.begin(), report.observed.end());
    out.insert(out.end(), report.profile_gaps.begin(), report.profile_gaps.end());
  }
  return out;
}

}  // namespace

TEST_CASE("pipeline output does not depend on the execution mode") {
  for (ModelKind kind : {ModelKind::cmp, ModelKind::random_walk}) {
    const Experiment ex(small(kind));
    const auto serial = fingerprint(ex, {Execution::serial, 1});
    CHECK(serial.size() > 50);
    for (int threads : {1, 2, 4}) CHECK(fingerprint(ex, {Execution::parallel, threads}) == serial);
  }
}

TEST_CASE("observed data comes from the first split of the master seed") {
  auto config = small(ModelKind::cmp);
  config.seed = 99;
  const Experiment ex(config);
  RngStream s = RngStream(99).split(0);
  const auto expected = cmp::cmp_sample(300, {4.0, 2.0}, s);
  CHECK(std::get<cmp::CountDataset>(ex.simulate_data()).counts() == expected.counts());

  config.seed = 100;
  CHECK(std::get<cmp::CountDataset>(Experiment(config).simulate_data()).counts() != expected.counts());
}

TEST_CASE("per-alpha coverage uses one delta per level") {
  auto config = small(ModelKind::cmp);
  config.coverage.per_alpha = true;
  const Experiment ex(config);
  const auto stage = ex.profile(ex.observed_loss(ex.simulate_data()));
  const auto cal = ex.calibrate(stage);
  const auto reports = ex.coverage(&cal);
  REQUIRE(reports.size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(reports[i].deltas == delta_star_per_alpha(cal.results[i], config.coverage.alphas, config.calibration));
}

TEST_CASE("saved data loads back and is checked against the config") {
  const auto dir = std::filesystem::temp_directory_path() / "glp_test_experiment";
  std::filesystem::create_directories(dir);
  for (ModelKind kind : {ModelKind::cmp, ModelKind::random_walk}) {
    const Experiment ex(small(kind));
    const auto data = ex.simulate_data();
    const auto path = dir / ex.data_file_name();
    ex.save_data(path, data);
    const auto back = ex.load_data(path);
    const std::vector<double> probe = ex.config().true_params;
    CHECK(ex.observed_loss(back)(probe) == ex.observed_loss(data)(probe));

    auto other = small(kind);
    other.n = 301;
    other.walk.m = 101;
    CHECK_THROWS_AS(Experiment(other).load_data(path), InvalidInput);
  }
}

TEST_CASE("config validation") {
  auto c = small(ModelKind::cmp);
  c.true_params = {30.0, 2.0};
  CHECK_THROWS_AS(Experiment{c}, InvalidInput);

  c = small(ModelKind::cmp);
  c.profiles[0].interest = "mu";
  CHECK_THROWS_AS(Experiment{c}, InvalidInput);

  c = small(ModelKind::cmp);
  c.profiles[0].range = std::pair{5.0, 2.0};
  CHECK_THROWS_AS(Experiment{c}, InvalidInput);

  c = small(ModelKind::cmp);
  c.coverage.delta_star = {1.0};
  CHECK_THROWS_AS(Experiment{c}, InvalidInput);

  c = small(ModelKind::cmp);
  c.coverage.delta_star = {1.0, 2.0};
  c.coverage.per_alpha = true;
  CHECK_THROWS_AS(Experiment{c}, InvalidInput);

  c = small(ModelKind::random_walk);
  c.walk.positions = {12};
  CHECK_THROWS_AS(Experiment{c}, InvalidInput);

  c = small(ModelKind::cmp);
  c.coverage.delta_star = {1.0, 2.0};
  const Experiment fixed(c);
  CHECK(fixed.coverage(nullptr).size() == 2);
  CHECK_THROWS_AS(Experiment(small(ModelKind::cmp)).coverage(nullptr), InvalidInput);
}
