#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

/// Closed-form delta* for the grid {step, 2 step, ...}.
///
/// With sorted gaps g_0..g_{K-1}, exactly j replicates are covered for delta
/// in (tau / g_j, tau / g_{j-1}]. Counts are tried in order of distance from
/// (1 - alpha) K, ties to the larger count; the answer is the smallest grid
/// node inside the first reachable interval. Empty when no gap is positive.
inline std::optional<double> grid_delta_star(std::vector<double> gaps, double tau, double alpha, double step) {
  std::sort(gaps.begin(), gaps.end());
  const std::size_t K = gaps.size();
  if (K == 0 || !(gaps.back() > 0.0)) return std::nullopt;
  const double inf = std::numeric_limits<double>::infinity();
  const double target = (1.0 - alpha) * static_cast<double>(K);

  std::vector<std::size_t> counts(K + 1);
  for (std::size_t j = 0; j <= K; ++j) counts[j] = j;
  std::stable_sort(counts.begin(), counts.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(static_cast<double>(a) - target), db = std::abs(static_cast<double>(b) - target);
    return da < db || (da == db && a > b);
  });
  for (std::size_t j : counts) {
    if (j < K && !(gaps[j] > 0.0)) continue;  // non-positive gaps are always covered
    const double lo = j < K ? tau / gaps[j] : 0.0;
    const double hi = j == 0 ? inf : (gaps[j - 1] > 0.0 ? tau / gaps[j - 1] : inf);
    const double node = std::max(1.0, std::floor(lo / step) + 1.0) * step;
    if (node <= hi) return node;
  }
  return std::nullopt;
}

}  // namespace oracle
