// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glp/calibrate.hpp"
#include "glp/experiment.hpp"
#include "glp/models/cmp.hpp"
#include "glp/models/random_walk.hpp"
#include "glp/profile.hpp"
#include "glp/stats.hpp"
#include "oracles.hpp"

namespace {

using namespace glp;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string interval(double lo, double hi) { return "[" + fmt("%.5g", lo) + ", " + fmt("%.5g", hi) + "]"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every calibration performed during the run, for the property checks.
std::vector<CalibrationResult>& calibration_log() {
  static std::vector<CalibrationResult> log;
  return log;
}

struct Run {
  ProfileStage profile;
  CalibrationStage calibration;
};

Run run_calibration(const Experiment& ex, const ObservedData& data) {
  Run run;
  run.profile = ex.profile(ex.observed_loss(data));
  run.calibration = ex.calibrate(run.profile);
  for (const auto& r : run.calibration.results) calibration_log().push_back(r);
  return run;
}

ExperimentConfig cmp_config() {
  ExperimentConfig c = ExperimentConfig::defaults(ModelKind::cmp);
  c.seed = 1;
  return c;
}

ExperimentConfig walk_config(double p_r, int sites, std::uint64_t seed) {
  ExperimentConfig c = ExperimentConfig::defaults(ModelKind::random_walk);
  c.true_params = {0.001, p_r};
  c.walk.lattice.sites = sites;
  c.seed = seed;
  return c;
}

// Reference profile interval of the CMP negative log-likelihood at tau = 1.92.
ConfidenceSet likelihood_interval(const Experiment& ex, const cmp::CountDataset& data, const ProfileGrid& grid) {
  const Objective nll = cmp::nll_objective(data);
  const auto& space = ex.config().space;
  const OptimResult fit = fit_mgle(nll, space, ex.config().optimizer);
  const ProfileCurve curve = evaluate_profile(nll, space, grid, fit, ex.config().optimizer);
  return confidence_set(curve, 1.0, 1.92);
}

struct CmpState {
  bool ready = false;
  Run run;
};

CmpState& cmp_state() {
  static CmpState state;
  if (!state.ready) {
    const Experiment ex(cmp_config());
    state.run = run_calibration(ex, ex.simulate_data());
    state.ready = true;
  }
  return state;
}

Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const Experiment ex(cmp_config());
  const auto data = std::get<cmp::CountDataset>(ex.simulate_data());
  const Run& run = cmp_state().run;
  const auto grids = ex.grids();
  const auto& truth = ex.config().true_params;
  const auto& names = ex.config().space.names();
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const ConfidenceSet& set = run.calibration.sets[i];
    const ConfidenceSet ref = likelihood_interval(ex, data, grids[i]);
    const double t = truth[i];
    v.require(set.contains(t), names[i] + " GLP " + interval(set.lower, set.upper) + " contains " + fmt("%g", t));
    v.require(set.upper - set.lower >= ref.upper - ref.lower,
              names[i] + " GLP width >= likelihood " + interval(ref.lower, ref.upper) + ", delta* " +
                  fmt("%.4g", run.calibration.results[i].delta_star));
  }
  v.detail += "; " + fmt("%.1fs", seconds_since(t0));
  return v;
}

Verdict coverage_check(std::size_t B, double tolerance, double budget_seconds) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = cmp_config();
  c.coverage.B = B;
  c.coverage.alphas = {0.05, 0.1, 0.2, 0.32, 0.5};
  const Experiment ex(c);
  const auto reports = ex.coverage(&cmp_state().run.calibration);
  const auto& names = c.space.names();
  for (const auto& r : reports) {
    std::string line = names[r.partition.interest().front()] + " B=" + std::to_string(B) + ":";
    bool ok = true;
    for (std::size_t a = 0; a < r.alphas.size(); ++a) {
      const double dev = r.observed[a] - (1.0 - r.alphas[a]);
      ok = ok && std::abs(dev) <= tolerance;
      line += " " + fmt("%.3f", r.observed[a]) + "(" + fmt("%+.3f", dev) + ")";
    }
    v.require(ok, line);
  }
  const double elapsed = seconds_since(t0);
  if (budget_seconds > 0) v.require(elapsed < budget_seconds, fmt("%.1fs", elapsed) + " < " + fmt("%.0fs", budget_seconds));
  return v;
}

Verdict criterion2() {
  Verdict full = coverage_check(500, 0.04, 0.0);
  const Verdict desk = coverage_check(200, 0.06, 600.0);
  full.pass = full.pass && desk.pass;
  full.detail += "; " + desk.detail;
  return full;
}

// Absorption-dominated lifetimes: a short lattice with release at its midpoint.
constexpr int kShortLattice = 11;

Verdict criterion3() {
  Verdict v;
  const Experiment ex(walk_config(0.5, kShortLattice, 1));
  const Run run = run_calibration(ex, ex.simulate_data());
  const auto& pd = run.calibration.sets[0];
  const auto& pr = run.calibration.sets[1];
  v.require(pd.contains(0.001), "p_d " + interval(pd.lower, pd.upper) + " contains 0.001");
  v.require(pr.contains(0.5), "p_r " + interval(pr.lower, pr.upper) + " contains 0.5");
  v.require(pd.hit_lower_bound && pd.lower == 0.0, "p_d lower endpoint at 0");
  v.require(!pr.hit_lower_bound && !pr.hit_upper_bound, "no p_r boundary flag");
  return v;
}

Verdict criterion4() {
  Verdict v;
  int flagged = 0, contains = 0, qb_excludes = 0, all = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Experiment ex(walk_config(0.7, kShortLattice, seed));
    const Run run = run_calibration(ex, ex.simulate_data());
    const auto& set = run.calibration.sets[1];
    const auto [qlo, qhi] = run.calibration.quantile_bootstrap[1];
    const bool f = set.hit_upper_bound;
    const bool c = set.contains(0.7);
    const bool q = !(qlo <= 0.7 && 0.7 <= qhi);
    flagged += f;
    contains += c;
    qb_excludes += q;
    all += f && c && q;
    per_seed += " s" + std::to_string(seed) + ":QB" + interval(qlo, qhi);
  }
  v.require(flagged >= 7, "upper flag " + std::to_string(flagged) + "/10");
  v.require(contains >= 7, "GLP contains 0.7 " + std::to_string(contains) + "/10");
  v.require(qb_excludes >= 7, "QB excludes 0.7 " + std::to_string(qb_excludes) + "/10");
  v.require(all >= 7, "all three " + std::to_string(all) + "/10");
  v.detail += ";" + per_seed;
  return v;
}

Verdict criterion5() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (double p_r : {0.48, 0.5, 0.52}) {
    ExperimentConfig c = walk_config(p_r, 101, 1);
    c.coverage.B = 200;
    c.coverage.alphas = {0.05, 0.2, 0.5};
    c.coverage.per_alpha = true;
    const Experiment ex(c);
    const Run run = run_calibration(ex, ex.simulate_data());
    const auto reports = ex.coverage(&run.calibration);
    for (const auto& r : reports) {
      std::string line = "p_r=" + fmt("%.2f", p_r) + " " + c.space.names()[r.partition.interest().front()] + ":";
      bool ok = true;
      for (std::size_t a = 0; a < r.alphas.size(); ++a) {
        const double dev = r.observed[a] - (1.0 - r.alphas[a]);
        ok = ok && std::abs(dev) <= 0.07;
        line += " " + fmt("%.3f", r.observed[a]) + "(" + fmt("%+.3f", dev) + ")";
      }
      v.require(ok, line);
    }
  }
  v.detail += "; " + fmt("%.1fs", seconds_since(t0));
  return v;
}

Verdict criterion6() {
  Verdict v;

  // log G(delta) = delta * log G(1), bit for bit.
  {
    RngStream s(11);
    bool exact = true;
    for (int i = 0; i < 100000; ++i) {
      const double loss = (s.uniform() - 0.3) * std::pow(10.0, 8.0 * s.uniform() - 4.0);
      const double delta = std::pow(10.0, 6.0 * s.uniform() - 3.0);
      exact = exact && generalised_log_likelihood(loss, delta) == delta * generalised_log_likelihood(loss, 1.0);
    }
    v.require(exact, "delta-power identity");
  }

  // Fresh calibrations so this criterion stands alone.
  {
    const Experiment ex(cmp_config());
    run_calibration(ex, ex.simulate_data());
    const Experiment walk(walk_config(0.5, 101, 1));
    run_calibration(walk, walk.simulate_data());
  }
  bool monotone = true;
  double worst = 0.0;
  const double step = CalibrationConfig{}.delta_step;
  for (const auto& r : calibration_log()) {
    for (std::size_t i = 1; i < r.coverage_curve.size(); ++i)
      monotone = monotone && r.coverage_curve[i].coverage <= r.coverage_curve[i - 1].coverage;
    const auto oracle = oracle::grid_delta_star(r.gaps(), r.tau_alpha, CalibrationConfig{}.alpha, step);
    if (oracle) worst = std::max(worst, std::abs(r.delta_star - *oracle));
  }
  v.require(monotone, "C(delta) non-increasing on " + std::to_string(calibration_log().size()) + " calibrations");
  v.require(worst <= step + 1e-12, "grid vs oracle delta* max diff " + fmt("%.3g", worst));

  // BVP against both analytic first moments at N = 200.
  {
    const rw::Lattice lattice{200};
    const double L = lattice.length();
    double err_flat = 0.0, err_decay = 0.0;
    const auto flat = rw::solve_moment_bvp(1, {1.0, 0.0, 0.5}, lattice);
    const double d = 0.001, D = 0.5, k = std::sqrt(d / D);
    const auto decay = rw::solve_moment_bvp(1, {1.0, d, 0.5}, lattice);
    for (int s = 2; s <= lattice.sites; ++s) {
      const double x = lattice.position(s);
      const double exact_flat = x * (2.0 * L - x);
      const double exact_decay = (1.0 - std::cosh((L - x) * k) / std::cosh(L * k)) / d;
      err_flat = std::max(err_flat, std::abs(flat.at(1, s) - exact_flat) / exact_flat);
      err_decay = std::max(err_decay, std::abs(decay.at(1, s) - exact_decay) / exact_decay);
    }
    // Second order: halving the spacing divides the error by about four.
    auto max_error = [&](int refinement) {
      const auto t = rw::solve_moment_bvp(1, {1.0, 0.05, 0.5}, rw::Lattice{21}, refinement);
      const double kk = std::sqrt(0.05 / D), LL = 20.0;
      double e = 0.0;
      for (int s = 2; s <= 21; ++s) {
        const double x = s - 1.0;
        e = std::max(e, std::abs(t.at(1, s) - (1.0 - std::cosh((LL - x) * kk) / std::cosh(LL * kk)) / 0.05));
      }
      return e;
    };
    const double ratio = max_error(1) / max_error(2);
    v.require(err_flat < 1e-4 && err_decay < 1e-4,
              "BVP relative error " + fmt("%.2g", std::max(err_flat, err_decay)) + " at N=200");
    v.require(ratio > 3.5 && ratio < 4.5, "refinement error ratio " + fmt("%.2f", ratio));
  }

  // Simulator against the BVP: first two moments at three sites.
  {
    const rw::Lattice lattice{101};
    const int sites[] = {26, 51, 76};
    bool ok = true;
    double worst_z = 0.0;
    for (double p_r : {0.48, 0.5, 0.52}) {
      const rw::WalkParams params{1.0, 0.001, p_r};
      const auto table = rw::solve_moment_bvp(2, params, lattice);
      const auto data = rw::simulate_dataset(params, lattice, sites, 10000, RngStream(21), 100'000'000);
      for (std::size_t i = 0; i < 3; ++i) {
        std::vector<double> t1, t2;
        for (auto t : data.row(i)) {
          t1.push_back(static_cast<double>(t));
          t2.push_back(static_cast<double>(t) * static_cast<double>(t));
        }
        const double n = static_cast<double>(t1.size());
        const double z1 = (mean(t1) - table.at(1, sites[i])) / std::sqrt(sample_variance(t1) / n);
        const double z2 = (mean(t2) - table.at(2, sites[i])) / std::sqrt(sample_variance(t2) / n);
        worst_z = std::max({worst_z, std::abs(z1), std::abs(z2)});
        ok = ok && std::abs(z1) <= 3.0 && std::abs(z2) <= 3.0;
      }
    }
    v.require(ok, "simulator vs BVP max |z| " + fmt("%.2f", worst_z));
  }

  // DFD with and without the normalizer: dividing every mass by Z leaves the loss unchanged.
  {
    RngStream s(5);
    const auto data = cmp::cmp_sample(500, {4.0, 2.0}, s);
    double worst_rel = 0.0;
    for (auto [lambda, nu] : {std::pair{4.0, 2.0}, {1.5, 1.2}, {12.0, 3.0}, {19.0, 7.5}}) {
      const cmp::CmpParams p{lambda, nu};
      const double log_z = cmp::cmp_log_normalizer(p, 1e-12).log_value;
      // Ratios p(y-1)/p(y) and p(y)/p(y+1) from normalized log masses.
      const auto& hist = data.histogram();
      auto log_mass = [&](std::uint64_t y) { return cmp::cmp_log_unnorm(y, p) - log_z; };
      double sum = 0.0;
      for (std::uint64_t y = 0; y < hist.size(); ++y) {
        if (hist[y] == 0) continue;
        const double back = std::exp(log_mass(y == 0 ? data.max_value() : y - 1) - log_mass(y));
        const double fwd = std::exp(log_mass(y) - log_mass(y + 1));
        sum += static_cast<double>(hist[y]) * (back * back - 2.0 * fwd);
      }
      const double normalized = sum / static_cast<double>(data.size());
      const double direct = cmp::dfd_loss(data, p);
      worst_rel = std::max(worst_rel, std::abs(normalized - direct) / std::abs(direct));
    }
    v.require(worst_rel <= 1e-12, "DFD normalizer cancellation rel " + fmt("%.2g", worst_rel));
  }

  // chi2 quantile round trip.
  {
    double worst_rt = 0.0;
    for (int df = 1; df <= 10; ++df)
      for (double p = 0.001; p < 1.0; p += 0.001) worst_rt = std::max(worst_rt, std::abs(chi2_cdf(chi2_quantile(p, df), df) - p));
    v.require(worst_rt <= 1e-8, "chi2 round trip " + fmt("%.2g", worst_rt));
  }

  // Bit-identical pipeline across execution modes and thread counts.
  {
    auto fingerprint = [](const Parallelism& par) {
      ExperimentConfig c = walk_config(0.5, 21, 3);
      c.walk.m = 200;
      c.walk.variance_resamples = 50;
      c.calibration.K = 20;
      c.profiles[0].M = 12;
      c.profiles[1].M = 12;
      c.coverage.B = 12;
      c.coverage.alphas = {0.05, 0.5};
      const Experiment ex(c);
      const auto data = ex.simulate_data(par);
      const auto stage = ex.profile(ex.observed_loss(data), par);
      const auto cal = ex.calibrate(stage, par);
      const auto cov = ex.coverage(&cal, par);
      std::vector<double> out{stage.mgle.value};
      for (const auto& curve : stage.curves) out.insert(out.end(), curve.profile_loss.begin(), curve.profile_loss.end());
      for (const auto& r : cal.results) {
        out.push_back(r.delta_star);
        out.insert(out.end(), r.bootstrap_mgle_losses.begin(), r.bootstrap_mgle_losses.end());
        out.insert(out.end(), r.bootstrap_profile_at_phi_hat.begin(), r.bootstrap_profile_at_phi_hat.end());
      }
      for (const auto& r : cov) out.insert(out.end(), r.profile_gaps.begin(), r.profile_gaps.end());
      return out;
    };
    const auto serial = fingerprint({Execution::serial, 1});
    bool same = true;
    for (int threads : {1, 2, 4, 8}) {
      const auto parallel = fingerprint({Execution::parallel, threads});
      same = same && parallel.size() == serial.size() &&
             std::equal(parallel.begin(), parallel.end(), serial.begin(),
                        [](double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; });
    }
    v.require(same, "bit-identical across serial and 1/2/4/8 threads");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  app.add_option("-c,--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 6));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6};

  const std::map<int, std::function<Verdict()>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5}, {6, criterion6}};
  bool all = true;
  for (int id : selected) {
    Verdict v;
    try {
      v = criteria.at(id)();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    all = all && v.pass;
    std::printf("criterion %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
