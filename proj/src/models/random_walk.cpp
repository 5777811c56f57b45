#include "glp/models/random_walk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "glp/errors.hpp"
#include "glp/io.hpp"

namespace glp::rw {

void WalkParams::validate() const {
  auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!unit(p_m) || !unit(p_d) || !unit(p_r)) throw InvalidInput("WalkParams: probabilities must lie in [0, 1]");
  if (!(p_d > 0.0 || (p_m > 0.0 && p_r < 1.0)))
    throw InvalidInput("WalkParams: need p_d > 0 or an attainable absorbing boundary");
}

void Lattice::validate() const {
  if (sites < 3) throw InvalidInput("Lattice: need at least 3 sites");
}

LifetimeDataset::LifetimeDataset(std::vector<int> positions, std::size_t m, std::vector<std::uint64_t> lifetimes)
    : positions_(std::move(positions)), m_(m), lifetimes_(std::move(lifetimes)) {
  if (positions_.empty() || m_ == 0) throw InvalidInput("LifetimeDataset: need at least one position and lifetime");
  if (lifetimes_.size() != positions_.size() * m_) throw InvalidInput("LifetimeDataset: shape mismatch");
  for (auto t : lifetimes_)
    if (t < 1) throw InvalidInput("LifetimeDataset: lifetimes must be at least 1");
  for (int p : positions_)
    if (p < 2) throw InvalidInput("LifetimeDataset: release sites must be interior or reflecting");
}

std::uint64_t simulate_lifetime(const WalkParams& params, const Lattice& lattice, int start_site,
                                RngStream& stream, std::uint64_t max_steps) {
  params.validate();
  lattice.validate();
  if (start_site < 2 || start_site > lattice.sites) throw InvalidInput("simulate_lifetime: start site out of range");
  if (max_steps < 1) throw InvalidInput("simulate_lifetime: max_steps must be positive");

  // One uniform per step: [0, death) dies, [death, right) moves right,
  // [right, move) moves left, the rest rests.
  const double death = params.p_d;
  const double survive_move = (1.0 - params.p_d) * params.p_m;
  const double right = death + survive_move * params.p_r;
  const double move = death + survive_move;
  const int last = lattice.sites;

  int site = start_site;
  for (std::uint64_t t = 1; t <= max_steps; ++t) {
    const double u = stream.uniform();
    if (u < death) return t;
    if (u < move) {
      if (site == 1) return t;
      if (u < right) {
        if (site != last) ++site;
      } else {
        --site;
      }
    }
  }
  throw TruncationError(max_steps, "simulate_lifetime: particle survived " + std::to_string(max_steps) + " steps");
}

LifetimeDataset simulate_dataset(const WalkParams& params, const Lattice& lattice, std::span<const int> positions,
                                 std::size_t m, const RngStream& stream, std::uint64_t max_steps,
                                 const Parallelism& parallelism) {
  if (m < 1) throw InvalidInput("simulate_dataset: m must be at least 1");
  if (positions.empty()) throw InvalidInput("simulate_dataset: no release positions");
  params.validate();
  lattice.validate();
  const std::size_t n = positions.size();
  std::vector<std::uint64_t> lifetimes(n * m);
  for_each_index(n * m, parallelism, [&](std::size_t idx) {
    const std::size_t i = idx / m;
    const std::size_t j = idx % m;
    RngStream s = stream.split(i).split(j);
    lifetimes[idx] = simulate_lifetime(params, lattice, positions[i], s, max_steps);
  });
  return LifetimeDataset(std::vector<int>(positions.begin(), positions.end()), m, std::move(lifetimes));
}

std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> sup, std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (n == 0 || sub.size() != n || sup.size() != n || rhs.size() != n)
    throw InvalidInput("solve_tridiagonal: size mismatch");
  std::vector<double> c(n), d(n), x(n);
  if (diag[0] == 0.0) throw SingularSystem("solve_tridiagonal: zero pivot");
  c[0] = sup[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double pivot = diag[i] - sub[i] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw SingularSystem("solve_tridiagonal: zero pivot");
    c[i] = sup[i] / pivot;
    d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

MomentTable solve_moment_bvp(int order, const WalkParams& params, const Lattice& lattice, int refinement) {
  if (order < 1) throw InvalidInput("solve_moment_bvp: order must be at least 1");
  if (refinement < 1) throw InvalidInput("solve_moment_bvp: refinement must be at least 1");
  params.validate();
  lattice.validate();
  if (!(params.p_m > 0.0)) throw InvalidInput("solve_moment_bvp: need p_m > 0");

  MomentTable table;
  table.order = order;
  table.lattice = lattice;
  table.refinement = refinement;
  table.diffusivity = params.p_m / 2.0;
  table.drift = params.p_m * (1.0 - 2.0 * params.p_r);
  table.decay = params.p_d;

  const double h = 1.0 / refinement;
  const double D = table.diffusivity;
  const double v = table.drift;
  const double d = table.decay;
  table.high_peclet = std::abs(v) * h / (2.0 * D) >= 1.0;

  const std::size_t J = static_cast<std::size_t>(lattice.sites - 1) * refinement + 1;
  const double a = D / (h * h) + v / (2.0 * h);  // M_{j-1}
  const double b = -2.0 * D / (h * h) - d;      // M_j
  const double c = D / (h * h) - v / (2.0 * h);  // M_{j+1}
  if (a == 0.0) throw SingularSystem("solve_moment_bvp: singular reflecting row");

  std::vector<double> sub(J, 0.0), diag(J, 0.0), sup(J, 0.0);
  diag[0] = 1.0;  // M(0) = 0
  for (std::size_t j = 1; j + 1 < J; ++j) {
    sub[j] = a;
    diag[j] = b;
    sup[j] = c;
  }
  // (3 M_J - 4 M_{J-1} + M_{J-2}) / 2h = 0 with M_{J-2} eliminated through the
  // interior row at J-1, scaled by a.
  sub[J - 1] = -4.0 * a - b;
  diag[J - 1] = 3.0 * a - c;

  std::vector<double> previous(J, 1.0);
  std::vector<double> rhs(J);
  for (int k = 1; k <= order; ++k) {
    rhs[0] = 0.0;
    for (std::size_t j = 1; j + 1 < J; ++j) rhs[j] = -k * previous[j];
    rhs[J - 1] = k * previous[J - 2];
    std::vector<double> sol = solve_tridiagonal(sub, diag, sup, rhs);
    std::vector<double> at_sites(static_cast<std::size_t>(lattice.sites));
    for (int s = 0; s < lattice.sites; ++s) at_sites[s] = sol[static_cast<std::size_t>(s) * refinement];
    table.values.push_back(std::move(at_sites));
    previous = std::move(sol);
  }
  return table;
}

MomentMatrix empirical_moments(const LifetimeDataset& data, int order) {
  if (order < 1) throw InvalidInput("empirical_moments: order must be at least 1");
  MomentMatrix out(order, data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (auto t : data.row(i)) {
      const double td = static_cast<double>(t);
      double power = td;
      for (int k = 1; k <= order; ++k) {
        out(k, i) += power;
        power *= td;
      }
    }
    for (int k = 1; k <= order; ++k) out(k, i) /= static_cast<double>(data.m());
  }
  return out;
}

VarianceTable bootstrap_moment_variance(const LifetimeDataset& data, int order, std::size_t resamples,
                                        RngStream& stream) {
  if (order < 1) throw InvalidInput("bootstrap_moment_variance: order must be at least 1");
  if (data.m() < 2) throw InvalidInput("bootstrap_moment_variance: need at least two lifetimes per position");
  if (resamples < 2) throw InvalidInput("bootstrap_moment_variance: need at least two resamples");

  const std::size_t n = data.n();
  const std::size_t m = data.m();
  VarianceTable table{MomentMatrix(order, n), std::vector<bool>(order * n, false)};
  std::vector<std::vector<double>> draws(order, std::vector<double>(resamples));
  for (std::size_t i = 0; i < n; ++i) {
    RngStream s = stream.split(i);
    const auto row = data.row(i);
    for (std::size_t rep = 0; rep < resamples; ++rep) {
      std::vector<double> sums(order, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        const double td = static_cast<double>(row[s.below(m)]);
        double power = td;
        for (int k = 0; k < order; ++k) {
          sums[k] += power;
          power *= td;
        }
      }
      for (int k = 0; k < order; ++k) draws[k][rep] = sums[k] / static_cast<double>(m);
    }
    for (int k = 1; k <= order; ++k) {
      double var = sample_variance(draws[k - 1]);
      if (!(var > VarianceTable::floor)) {
        var = VarianceTable::floor;
        table.floored[(k - 1) * n + i] = true;
      }
      table.values(k, i) = var;
    }
  }
  return table;
}

double moment_loss(const MomentMatrix& empirical, const VarianceTable& variance, std::span<const int> positions,
                   const WalkParams& params, const Lattice& lattice) {
  const int order = empirical.order();
  if (variance.values.order() != order || variance.values.positions() != empirical.positions() ||
      positions.size() != empirical.positions())
    throw InvalidInput("moment_loss: shape mismatch");
  MomentTable model;
  try {
    model = solve_moment_bvp(order, params, lattice);
  } catch (const SingularSystem&) {
    return std::numeric_limits<double>::infinity();
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (int k = 1; k <= order; ++k) {
      const double diff = model.at(k, positions[i]) - empirical(k, i);
      loss += diff * diff / variance.values(k, i);
    }
  }
  return std::isfinite(loss) ? loss : std::numeric_limits<double>::infinity();
}

double moment_loss(const LifetimeDataset& data, const WalkParams& params, const Lattice& lattice, int order,
                   const VarianceTable& variance) {
  return moment_loss(empirical_moments(data, order), variance, data.positions(), params, lattice);
}

std::vector<int> RandomWalkSetup::release_sites() const {
  return positions.empty() ? std::vector<int>{lattice.midpoint_site()} : positions;
}

void RandomWalkSetup::validate() const {
  lattice.validate();
  for (int p : release_sites())
    if (p < 2 || p > lattice.sites) throw InvalidInput("RandomWalkSetup: release site out of range");
  if (m < 2) throw InvalidInput("RandomWalkSetup: need m >= 2 lifetimes per position");
  if (order < 1) throw InvalidInput("RandomWalkSetup: moment order must be at least 1");
  if (variance_resamples < 2) throw InvalidInput("RandomWalkSetup: need at least two variance resamples");
  if (!(p_m > 0.0 && p_m <= 1.0)) throw InvalidInput("RandomWalkSetup: p_m must lie in (0, 1]");
  if (max_steps < 1) throw InvalidInput("RandomWalkSetup: max_steps must be positive");
}

ParameterSpace random_walk_parameter_space() { return ParameterSpace({"p_d", "p_r"}, {0.0, 0.3}, {0.01, 0.9}); }

RandomWalkModel::RandomWalkModel(RandomWalkSetup setup, ParameterSpace space)
    : setup_(std::move(setup)), space_(std::move(space)) {
  setup_.validate();
  if (space_.dim() != 2) throw InvalidInput("RandomWalkModel: parameter space must be (p_d, p_r)");
}

LifetimeDataset RandomWalkModel::simulate(std::span<const double> theta, const RngStream& stream,
                                          const Parallelism& parallelism) const {
  const auto sites = setup_.release_sites();
  return simulate_dataset(params(theta), setup_.lattice, sites, setup_.m, stream, setup_.max_steps, parallelism);
}

Objective RandomWalkModel::bind(const LifetimeDataset& data, RngStream stream) const {
  struct Bound {
    MomentMatrix empirical;
    VarianceTable variance;
    std::vector<int> positions;
  };
  auto bound = std::make_shared<const Bound>(Bound{empirical_moments(data, setup_.order),
                                                   bootstrap_moment_variance(data, setup_.order,
                                                                             setup_.variance_resamples, stream),
                                                   data.positions()});
  const double p_m = setup_.p_m;
  const Lattice lattice = setup_.lattice;
  return [bound, p_m, lattice](std::span<const double> theta) {
    return moment_loss(bound->empirical, bound->variance, bound->positions, WalkParams{p_m, theta[0], theta[1]},
                       lattice);
  };
}

Objective RandomWalkModel::simulate_loss(std::span<const double> theta, RngStream stream) const {
  return bind(simulate(theta, stream.split(0)), stream.split(1));
}

void write_lifetimes(const std::filesystem::path& path, const LifetimeDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write lifetime file " + path.string());
  out << "position,replicate,lifetime\n";
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t j = 0; j < data.m(); ++j) out << data.positions()[i] << ',' << j << ',' << data.at(i, j) << '\n';
  if (!out) throw IoError("error writing lifetime file " + path.string());
}

LifetimeDataset read_lifetimes(const std::filesystem::path& path) {
  const io::CsvTable table = io::read_csv(path);
  const auto pc = table.column("position");
  const auto rc = table.column("replicate");
  const auto lc = table.column("lifetime");
  std::map<int, std::map<std::size_t, std::uint64_t>> by_position;
  std::vector<int> order;
  for (const auto& row : table.rows) {
    const int pos = std::stoi(row[pc]);
    const auto rep = static_cast<std::size_t>(std::stoull(row[rc]));
    const auto life = static_cast<std::uint64_t>(std::stoull(row[lc]));
    if (!by_position.count(pos)) order.push_back(pos);
    if (!by_position[pos].emplace(rep, life).second)
      throw InvalidInput("lifetime file: duplicate (position, replicate) entry");
  }
  if (order.empty()) throw InvalidInput("lifetime file: no rows");
  const std::size_t m = by_position[order.front()].size();
  std::vector<std::uint64_t> lifetimes;
  for (int pos : order) {
    const auto& reps = by_position[pos];
    if (reps.size() != m) throw InvalidInput("lifetime file: positions have unequal replicate counts");
    std::size_t expected = 0;
    for (const auto& [rep, life] : reps) {
      if (rep != expected++) throw InvalidInput("lifetime file: replicate indices must be 0..m-1");
      lifetimes.push_back(life);
    }
  }
  return LifetimeDataset(std::move(order), m, std::move(lifetimes));
}

void write_moment_table(const std::filesystem::path& path, const MomentTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write moment table " + path.string());
  out << "x,k,M_k\n";
  for (int k = 1; k <= table.order; ++k)
    for (int s = 1; s <= table.lattice.sites; ++s)
      out << io::format_double(table.lattice.position(s)) << ',' << k << ',' << io::format_double(table.at(k, s))
          << '\n';
  if (!out) throw IoError("error writing moment table " + path.string());
}

}  // namespace glp::rw
