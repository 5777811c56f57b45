#include "glp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "glp/errors.hpp"

namespace glp {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t child_key(std::uint64_t parent, std::uint64_t label) {
  return splitmix64(parent ^ splitmix64(label ^ 0xd1b54a32d192ed03ULL));
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed)
    : RngStream(master_seed, {}, splitmix64(master_seed)) {}

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> path, std::uint64_t key)
    : seed_(seed), path_(std::move(path)), key_(key), engine_(key) {}

RngStream RngStream::split(std::uint64_t label) const {
  auto path = path_;
  path.push_back(label);
  return RngStream(seed_, std::move(path), child_key(key_, label));
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw InvalidInput("RngStream::below: empty range");
  // Lemire's multiply-shift with rejection.
  unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine_()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

RngStream split_stream(const RngStream& parent, std::uint64_t label) { return parent.split(label); }

double chi2_cdf(double x, int df) {
  if (df < 1) throw InvalidInput("chi2_cdf: df must be positive");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, int df) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("chi2_quantile: p must lie in (0, 1)");
  if (df < 1) throw InvalidInput("chi2_quantile: df must be positive");

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(df));
  while (chi2_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
  }
  // Above the median the residual is taken on the upper tail, which keeps
  // full relative precision as p approaches 1.
  const bool upper = p > 0.5;
  const double q = 1.0 - p;
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = upper ? q - boost::math::gamma_q(0.5 * df, 0.5 * x) : chi2_cdf(x, df) - p;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;

    const double density = 0.5 * boost::math::gamma_p_derivative(0.5 * df, 0.5 * x);
    double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step < 1e-13 * std::max(1.0, x) || hi - lo < 1e-13 * std::max(1.0, x)) break;
  }
  return x;
}

std::vector<double> resample_with_replacement(std::span<const double> values, RngStream& stream) {
  if (values.empty()) throw InvalidInput("resample_with_replacement: empty input");
  std::vector<double> out(values.size());
  for (auto& v : out) v = values[stream.below(values.size())];
  return out;
}

double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidInput("empirical_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("empirical_quantile: q must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const std::size_t above = std::min(below + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(below);
  return sorted[below] + frac * (sorted[above] - sorted[below]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("mean: empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw InvalidInput("sample_variance: need at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace glp
