#pragma once

// Biased nearest-neighbour random walk with death on a 1-D lattice.
// Site 1 (x = 0) is absorbing, site N (x = L = N - 1) reflecting; dx = dt = 1.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glp/parallel.hpp"
#include "glp/profile.hpp"
#include "glp/stats.hpp"

namespace glp::rw {

struct WalkParams {
  double p_m;  // movement
  double p_d;  // death
  double p_r;  // right bias of a movement

  void validate() const;
};

struct Lattice {
  int sites = 101;

  void validate() const;
  double length() const { return static_cast<double>(sites - 1); }
  double position(int site) const { return static_cast<double>(site - 1); }
  int midpoint_site() const { return (sites + 1) / 2; }
};

/// Row-major n x m matrix: lifetimes of m particles released at each of n sites.
class LifetimeDataset {
 public:
  LifetimeDataset(std::vector<int> positions, std::size_t m, std::vector<std::uint64_t> lifetimes);

  const std::vector<int>& positions() const noexcept { return positions_; }
  std::size_t n() const noexcept { return positions_.size(); }
  std::size_t m() const noexcept { return m_; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return lifetimes_[i * m_ + j]; }
  std::span<const std::uint64_t> row(std::size_t i) const { return {lifetimes_.data() + i * m_, m_}; }
  const std::vector<std::uint64_t>& lifetimes() const noexcept { return lifetimes_; }

 private:
  std::vector<int> positions_;
  std::size_t m_;
  std::vector<std::uint64_t> lifetimes_;
};

/// r x n matrix indexed by (k = 1..r, position index i).
class MomentMatrix {
 public:
  MomentMatrix(int order, std::size_t positions) : order_(order), n_(positions), values_(order * positions, 0.0) {}
  int order() const noexcept { return order_; }
  std::size_t positions() const noexcept { return n_; }
  double& operator()(int k, std::size_t i) { return values_[(k - 1) * n_ + i]; }
  double operator()(int k, std::size_t i) const { return values_[(k - 1) * n_ + i]; }

 private:
  int order_;
  std::size_t n_;
  std::vector<double> values_;
};

/// Continuum moments M_k at every lattice site, k = 1..order.
struct MomentTable {
  int order = 0;
  Lattice lattice;
  int refinement = 1;
  double diffusivity = 0.0;  // D = p_m / 2
  double drift = 0.0;        // v = p_m (1 - 2 p_r)
  double decay = 0.0;        // d = p_d
  bool high_peclet = false;  // |v| h / (2 D) >= 1
  std::vector<std::vector<double>> values;  // [k - 1][site - 1]

  double at(int k, int site) const { return k == 0 ? 1.0 : values[k - 1][site - 1]; }
};

struct VarianceTable {
  MomentMatrix values;
  std::vector<bool> floored;  // [(k - 1) * n + i]
  static constexpr double floor = 1e-12;
};

/// Lifetime of one particle released at start_site. Per step: death with
/// probability p_d; otherwise a movement event with probability p_m (right
/// with probability p_r); otherwise rest. A movement event at site 1 removes
/// the particle; a rightward move at site N is aborted.
std::uint64_t simulate_lifetime(const WalkParams& params, const Lattice& lattice, int start_site,
                                RngStream& stream, std::uint64_t max_steps);

/// m lifetimes per position; replicate j at position i uses stream.split(i).split(j).
LifetimeDataset simulate_dataset(const WalkParams& params, const Lattice& lattice, std::span<const int> positions,
                                 std::size_t m, const RngStream& stream, std::uint64_t max_steps,
                                 const Parallelism& parallelism = {});

/// Solves D M_k'' - v M_k' - d M_k = -k M_{k-1}, M_k(0) = 0, M_k'(L) = 0 by
/// central differences with spacing 1 / refinement.
MomentTable solve_moment_bvp(int order, const WalkParams& params, const Lattice& lattice, int refinement = 1);

/// Thomas algorithm; sub[0] and sup[n-1] are ignored. Throws SingularSystem on a zero pivot.
std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> sup, std::span<const double> rhs);

MomentMatrix empirical_moments(const LifetimeDataset& data, int order);

VarianceTable bootstrap_moment_variance(const LifetimeDataset& data, int order, std::size_t resamples,
                                        RngStream& stream);

/// Variance-weighted squared moment distance summed over positions, then orders.
/// +inf when the moment system is numerically singular or overflows.
double moment_loss(const MomentMatrix& empirical, const VarianceTable& variance, std::span<const int> positions,
                   const WalkParams& params, const Lattice& lattice);
double moment_loss(const LifetimeDataset& data, const WalkParams& params, const Lattice& lattice, int order,
                   const VarianceTable& variance);

struct RandomWalkSetup {
  Lattice lattice{101};
  std::vector<int> positions;  // empty: the midpoint site
  std::size_t m = 1000;
  int order = 2;
  std::size_t variance_resamples = 200;
  double p_m = 1.0;
  std::uint64_t max_steps = 100'000'000;

  std::vector<int> release_sites() const;
  void validate() const;
};

/// p_d in [0, 0.01], p_r in [0.3, 0.9].
ParameterSpace random_walk_parameter_space();

/// Walk with p_m held fixed; theta = (p_d, p_r).
class RandomWalkModel : public LossModel {
 public:
  explicit RandomWalkModel(RandomWalkSetup setup, ParameterSpace space = random_walk_parameter_space());

  const ParameterSpace& space() const override { return space_; }
  Objective simulate_loss(std::span<const double> theta, RngStream stream) const override;

  const RandomWalkSetup& setup() const noexcept { return setup_; }
  WalkParams params(std::span<const double> theta) const { return {setup_.p_m, theta[0], theta[1]}; }

  LifetimeDataset simulate(std::span<const double> theta, const RngStream& stream,
                           const Parallelism& parallelism = {Execution::serial, 1}) const;
  /// Loss bound to a dataset; its variance table is drawn from `stream`.
  Objective bind(const LifetimeDataset& data, RngStream stream) const;

 private:
  RandomWalkSetup setup_;
  ParameterSpace space_;
};

/// CSV with header position,replicate,lifetime.
void write_lifetimes(const std::filesystem::path& path, const LifetimeDataset& data);
LifetimeDataset read_lifetimes(const std::filesystem::path& path);

/// CSV with header x,k,M_k.
void write_moment_table(const std::filesystem::path& path, const MomentTable& table);

}  // namespace glp::rw
