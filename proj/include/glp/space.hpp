#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace glp {

using ParameterVector = std::vector<double>;

/// Scalar loss of a full parameter vector, bound to one dataset.
using Objective = std::function<double(std::span<const double>)>;

/// Box-bounded parameter domain with named coordinates.
class ParameterSpace {
 public:
  ParameterSpace(std::vector<std::string> names, std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const noexcept { return lower_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  double width(std::size_t i) const { return upper_[i] - lower_[i]; }

  bool contains(std::span<const double> theta) const;
  ParameterVector midpoint() const;
  std::size_t index_of(const std::string& name) const;

  /// Sub-box over the listed coordinates, in the given order.
  ParameterSpace subspace(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Split of parameter coordinates into interest (phi) and nuisance (psi) sets.
class InterestPartition {
 public:
  InterestPartition(std::size_t dim, std::vector<std::size_t> interest);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::size_t>& interest() const noexcept { return interest_; }
  const std::vector<std::size_t>& nuisance() const noexcept { return nuisance_; }
  std::size_t interest_dim() const noexcept { return interest_.size(); }

  ParameterVector compose(std::span<const double> phi, std::span<const double> psi) const;
  void compose_into(std::span<const double> phi, std::span<const double> psi, std::span<double> theta) const;
  ParameterVector interest_of(std::span<const double> theta) const;
  ParameterVector nuisance_of(std::span<const double> theta) const;

  bool operator==(const InterestPartition&) const = default;

 private:
  std::size_t dim_;
  std::vector<std::size_t> interest_;
  std::vector<std::size_t> nuisance_;
};

}  // namespace glp
