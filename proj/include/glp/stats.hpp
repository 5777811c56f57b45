#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace glp {

/// Reproducible random stream addressed by (master seed, split path).
///
/// Children are keyed from the parent's key and a label, never from the
/// parent's state, so splitting consumes no draws and parallel replicates
/// can be seeded without coordination. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t master_seed);

  RngStream split(std::uint64_t label) const;

  std::uint64_t master_seed() const noexcept { return seed_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased integer on [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  RngStream(std::uint64_t seed, std::vector<std::uint64_t> path, std::uint64_t key);

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

RngStream split_stream(const RngStream& parent, std::uint64_t label);

/// Regularized lower incomplete gamma CDF of chi-squared with df degrees of freedom.
double chi2_cdf(double x, int df);

/// Inverse of chi2_cdf by safeguarded Newton iteration, accurate to 1e-10 absolute.
double chi2_quantile(double p, int df);

std::vector<double> resample_with_replacement(std::span<const double> values, RngStream& stream);

/// Linear interpolation between order statistics at 1-based position q(K-1)+1.
double empirical_quantile(std::span<const double> values, double q);

double mean(std::span<const double> values);

/// Unbiased (K-1 denominator) sample variance. Requires at least two values.
double sample_variance(std::span<const double> values);

}  // namespace glp
