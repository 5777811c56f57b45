#pragma once

// Conway-Maxwell-Poisson counts: p(y) proportional to lambda^y / (y!)^nu.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glp/profile.hpp"
#include "glp/stats.hpp"

namespace glp::cmp {

struct CmpParams {
  double lambda;
  double nu;

  void validate() const;
};

/// Non-empty sample of non-negative counts, with its histogram cached.
class CountDataset {
 public:
  explicit CountDataset(std::vector<std::uint64_t> counts);

  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::size_t size() const noexcept { return counts_.size(); }
  std::uint64_t max_value() const noexcept { return max_; }
  /// histogram()[v] = number of observations equal to v, v = 0..max_value.
  const std::vector<std::uint64_t>& histogram() const noexcept { return histogram_; }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t max_;
  std::vector<std::uint64_t> histogram_;
};

/// ln(y!) by cumulative summation of logs.
double log_factorial(std::uint64_t y);

/// y ln(lambda) - nu ln(y!).
double cmp_log_unnorm(std::uint64_t y, const CmpParams& params);

struct Normalizer {
  double log_value = 0.0;
  double relative_tail_bound = 0.0;  // omitted tail mass / partial sum, upper bound
  std::uint64_t last_term = 0;
};

/// Truncated series for Z. Terms are summed until the geometric tail bound
/// term_Y r_Y / (1 - r_Y), r_Y = lambda / (Y + 1)^nu < 1, drops below
/// tail_tol times the partial sum.
Normalizer cmp_log_normalizer(const CmpParams& params, double tail_tol);
double cmp_normalizer(const CmpParams& params, double tail_tol);

/// Inverse-CDF sampler over the truncated support.
class CmpSampler {
 public:
  CmpSampler(const CmpParams& params, double tail_tol = 1e-12);
  std::uint64_t operator()(RngStream& stream) const;
  std::span<const double> cdf() const noexcept { return cdf_; }

 private:
  std::vector<double> cdf_;
};

CountDataset cmp_sample(std::size_t n, const CmpParams& params, RngStream& stream, double tail_tol = 1e-12);

/// Discrete Fisher divergence from unnormalized mass ratios. The backward
/// neighbour of y = 0 is the dataset maximum.
double dfd_loss(const CountDataset& data, const CmpParams& params);

/// n ln Z - sum_i ln p~(y_i).
double cmp_neg_log_likelihood(const CountDataset& data, const CmpParams& params, double tail_tol = 1e-12);

/// lambda in [1, 20], nu in [1, 8].
ParameterSpace cmp_parameter_space();

/// CMP sampler paired with the DFD loss; theta = (lambda, nu).
class CmpModel : public LossModel {
 public:
  explicit CmpModel(std::size_t n, ParameterSpace space = cmp_parameter_space(), double tail_tol = 1e-12);

  const ParameterSpace& space() const override { return space_; }
  Objective simulate_loss(std::span<const double> theta, RngStream stream) const override;

  std::size_t sample_size() const noexcept { return n_; }
  CountDataset simulate(std::span<const double> theta, RngStream& stream) const;

 private:
  std::size_t n_;
  ParameterSpace space_;
  double tail_tol_;
};

/// DFD loss bound to a dataset.
Objective dfd_objective(CountDataset data);
/// Reference negative log-likelihood bound to a dataset.
Objective nll_objective(CountDataset data, double tail_tol = 1e-12);

/// Newline-delimited counts.
CountDataset read_counts(const std::filesystem::path& path);
void write_counts(const std::filesystem::path& path, const CountDataset& data);

}  // namespace glp::cmp
