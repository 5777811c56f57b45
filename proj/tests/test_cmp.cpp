#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "glp/errors.hpp"
#include "glp/models/cmp.hpp"
#include "glp/profile.hpp"

using namespace glp;
using namespace glp::cmp;

namespace {

// Reference loss from normalized probabilities, so any normalizer error would show.
double dfd_from_pmf(const CountDataset& data, const CmpParams& params) {
  const double log_z = cmp_log_normalizer(params, 1e-15).log_value;
  auto log_p = [&](std::uint64_t y) { return cmp_log_unnorm(y, params) - log_z; };
  double sum = 0.0;
  for (auto y : data.counts()) {
    const std::uint64_t back = y == 0 ? data.max_value() : y - 1;
    const double b = std::exp(log_p(back) - log_p(y));
    const double f = std::exp(log_p(y) - log_p(y + 1));
    sum += b * b - 2.0 * f;
  }
  return sum / static_cast<double>(data.size());
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "glp_test_cmp";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("normalizer") {
  // sum 4^y / (y!)^2 is the modified Bessel function I0(4).
  CHECK(cmp_normalizer({4.0, 2.0}, 1e-14) == doctest::Approx(std::cyl_bessel_i(0.0, 4.0)).epsilon(1e-12));
  CHECK(cmp_normalizer({4.0, 2.0}, 1e-14) == doctest::Approx(11.3019219521).epsilon(1e-9));
  // Poisson: Z = e^lambda.
  CHECK(cmp_log_normalizer({7.5, 1.0}, 1e-14).log_value == doctest::Approx(7.5).epsilon(1e-12));

  const auto z = cmp_log_normalizer({3.0, 1.5}, 1e-12);
  CHECK(z.relative_tail_bound < 1e-12);
  const auto tighter = cmp_log_normalizer({3.0, 1.5}, 1e-15);
  CHECK(std::abs(z.log_value - tighter.log_value) < 1e-11);
  CHECK(tighter.last_term >= z.last_term);

  CHECK_THROWS_AS(cmp_log_normalizer({0.0, 1.0}, 1e-12), InvalidInput);
  CHECK_THROWS_AS(cmp_log_normalizer({1.0, 1.0}, 0.0), InvalidInput);
}

TEST_CASE("a single zero count has negative log-likelihood ln Z") {
  const CountDataset data({0});
  const CmpParams p{4.0, 2.0};
  CHECK(cmp_neg_log_likelihood(data, p) == doctest::Approx(std::log(std::cyl_bessel_i(0.0, 4.0))).epsilon(1e-12));
}

TEST_CASE("Poisson negative log-likelihood") {
  const CountDataset data({0, 2, 5, 1, 1});
  const double lambda = 2.3;
  double expected = 0.0;
  for (auto y : data.counts()) expected += lambda - y * std::log(lambda) + std::lgamma(y + 1.0);
  CHECK(cmp_neg_log_likelihood(data, {lambda, 1.0}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log_factorial") {
  CHECK(log_factorial(0) == 0.0);
  CHECK(log_factorial(1) == 0.0);
  CHECK(log_factorial(10) == doctest::Approx(std::lgamma(11.0)).epsilon(1e-13));
  CHECK(log_factorial(5000) == doctest::Approx(std::lgamma(5001.0)).epsilon(1e-12));
}

TEST_CASE("DFD loss by hand") {
  // y = 1, lambda = 2, nu = 1: (1/2)^2 - 2 (2/2).
  CHECK(dfd_loss(CountDataset({1}), {2.0, 1.0}) == doctest::Approx(-1.75));
  // y = 2, lambda = 1, nu = 1: backward ratio 2, forward ratio 3.
  CHECK(dfd_loss(CountDataset({2}), {1.0, 1.0}) == doctest::Approx(4.0 - 6.0));
  // Zero wraps to the dataset maximum: p(3)/p(0) = 8/6 for lambda = 2, nu = 1.
  const double zero_term = (8.0 / 6.0) * (8.0 / 6.0) - 2.0 * 0.5;
  const double three_term = 1.5 * 1.5 - 2.0 * 2.0;
  CHECK(dfd_loss(CountDataset({0, 3}), {2.0, 1.0}) == doctest::Approx((zero_term + three_term) / 2.0));
  CHECK_THROWS_AS(dfd_loss(CountDataset({1}), {-1.0, 1.0}), InvalidInput);
}

TEST_CASE("property: DFD loss agrees with the normalized-probability form") {
  gen::for_cases(21, 100, [](RngStream& s, int) {
    const CmpParams p{gen::uniform(s, 1.0, 20.0), gen::uniform(s, 1.0, 8.0)};
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(gen::integer(s, 1, 40)));
    for (auto& c : counts) c = static_cast<std::uint64_t>(gen::integer(s, 0, 12));
    const CountDataset data(counts);
    const double ours = dfd_loss(data, p);
    const double ref = dfd_from_pmf(data, p);
    CHECK(std::abs(ours - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
  });
}

TEST_CASE("sampler") {
  SUBCASE("Poisson mean") {
    RngStream s(22);
    const auto data = cmp_sample(100000, {3.0, 1.0}, s);
    double sum = 0.0;
    for (auto y : data.counts()) sum += static_cast<double>(y);
    CHECK(std::abs(sum / 1e5 - 3.0) < 4.0 * std::sqrt(3.0 / 1e5));
  }
  SUBCASE("strong underdispersion stays near zero") {
    RngStream s(23);
    const auto data = cmp_sample(100000, {0.01, 5.0}, s);
    CHECK(data.max_value() <= 2);
  }
  SUBCASE("histogram matches the mass function") {
    const CmpParams p{4.0, 2.0};
    RngStream s(24);
    const std::size_t n = 100000;
    const auto data = cmp_sample(n, p, s);
    const double log_z = cmp_log_normalizer(p, 1e-15).log_value;
    double stat = 0.0, tail_expected = 0.0, tail_observed = 0.0;
    int cells = 0;
    for (std::uint64_t y = 0; y <= 30; ++y) {
      const double expected = n * std::exp(cmp_log_unnorm(y, p) - log_z);
      const double observed = y < data.histogram().size() ? static_cast<double>(data.histogram()[y]) : 0.0;
      if (expected >= 5.0) {
        stat += (observed - expected) * (observed - expected) / expected;
        ++cells;
      } else {
        tail_expected += expected;
        tail_observed += observed;
      }
    }
    if (tail_expected > 0.0) {
      stat += (tail_observed - tail_expected) * (tail_observed - tail_expected) / tail_expected;
      ++cells;
    }
    CHECK(stat < chi2_quantile(0.999, cells - 1));
  }
  SUBCASE("replay") {
    RngStream a(25), b(25);
    CHECK(cmp_sample(500, {6.0, 1.5}, a).counts() == cmp_sample(500, {6.0, 1.5}, b).counts());
  }
  const CmpSampler sampler({4.0, 2.0});
  CHECK(sampler.cdf().back() == 1.0);
  for (std::size_t i = 1; i < sampler.cdf().size(); ++i) CHECK(sampler.cdf()[i] >= sampler.cdf()[i - 1]);
}

TEST_CASE("DFD and likelihood estimates agree on a large sample") {
  const CmpModel model(5000);
  RngStream s(26);
  const auto data = model.simulate(std::vector<double>{4.0, 2.0}, s);
  const auto dfd = fit_mgle(dfd_objective(data), model.space(), OptimizerConfig{});
  const auto nll = fit_mgle(nll_objective(data), model.space(), OptimizerConfig{});
  CHECK(dfd.argmin[0] == doctest::Approx(4.0).epsilon(0.2));
  CHECK(dfd.argmin[1] == doctest::Approx(2.0).epsilon(0.2));
  CHECK(nll.argmin[0] == doctest::Approx(4.0).epsilon(0.2));
  CHECK(nll.argmin[1] == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("profile minimum sits within one grid step of the MGLE") {
  const CmpModel model(2000);
  RngStream s(27);
  const Objective loss = model.simulate_loss(std::vector<double>{4.0, 2.0}, s);
  for (std::size_t interest : {0u, 1u}) {
    const auto grid = ProfileGrid::regular(model.space(), InterestPartition(2, {interest}), 100);
    const auto curve = evaluate_profile(loss, model.space(), grid, OptimizerConfig{});
    const auto phi = grid.values();
    std::size_t best = 0;
    for (std::size_t j = 1; j < phi.size(); ++j)
      if (curve.profile_loss[j] < curve.profile_loss[best]) best = j;
    CHECK(std::abs(phi[best] - curve.mgle[interest]) <= phi[1] - phi[0]);
  }
}

TEST_CASE("count files") {
  const CountDataset data({0, 3, 3, 12, 1});
  const auto path = scratch("counts.txt");
  write_counts(path, data);
  CHECK(read_counts(path).counts() == data.counts());
  CHECK(read_counts(path).histogram() == std::vector<std::uint64_t>{1, 1, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 1});

  std::ofstream(scratch("bad.txt")) << "1\n-2\n";
  CHECK_THROWS_AS(read_counts(scratch("bad.txt")), InvalidInput);
  std::ofstream(scratch("words.txt")) << "1\n2 3\n";
  CHECK_THROWS_AS(read_counts(scratch("words.txt")), InvalidInput);
  CHECK_THROWS_AS(read_counts(scratch("missing.txt")), IoError);
  CHECK_THROWS_AS(CountDataset({}), InvalidInput);
}
