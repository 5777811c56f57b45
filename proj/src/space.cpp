#include "glp/space.hpp"

#include <algorithm>
#include <cmath>

#include "glp/errors.hpp"

namespace glp {

ParameterSpace::ParameterSpace(std::vector<std::string> names, std::vector<double> lower,
                               std::vector<double> upper)
    : names_(std::move(names)), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty()) throw InvalidInput("ParameterSpace: dimension must be at least 1");
  if (lower_.size() != upper_.size() || names_.size() != lower_.size())
    throw InvalidInput("ParameterSpace: names, lower and upper must have equal length");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i]))
      throw InvalidInput("ParameterSpace: need finite lower < upper for '" + names_[i] + "'");
  }
}

bool ParameterSpace::contains(std::span<const double> theta) const {
  if (theta.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return false;
  }
  return true;
}

ParameterVector ParameterSpace::midpoint() const {
  ParameterVector mid(dim());
  for (std::size_t i = 0; i < dim(); ++i) mid[i] = 0.5 * (lower_[i] + upper_[i]);
  return mid;
}

std::size_t ParameterSpace::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

ParameterSpace ParameterSpace::subspace(std::span<const std::size_t> indices) const {
  std::vector<std::string> n;
  std::vector<double> lo, hi;
  for (auto i : indices) {
    n.push_back(names_.at(i));
    lo.push_back(lower_.at(i));
    hi.push_back(upper_.at(i));
  }
  return ParameterSpace(std::move(n), std::move(lo), std::move(hi));
}

InterestPartition::InterestPartition(std::size_t dim, std::vector<std::size_t> interest)
    : dim_(dim), interest_(std::move(interest)) {
  if (dim_ == 0) throw InvalidInput("InterestPartition: dimension must be at least 1");
  if (interest_.empty()) throw InvalidInput("InterestPartition: need at least one interest parameter");
  std::vector<bool> seen(dim_, false);
  for (auto i : interest_) {
    if (i >= dim_) throw InvalidInput("InterestPartition: interest index out of range");
    if (seen[i]) throw InvalidInput("InterestPartition: duplicate interest index");
    seen[i] = true;
  }
  for (std::size_t i = 0; i < dim_; ++i)
    if (!seen[i]) nuisance_.push_back(i);
  if (nuisance_.empty() && dim_ > 1)
    throw InvalidInput("InterestPartition: nuisance set may only be empty when dim = 1");
}

void InterestPartition::compose_into(std::span<const double> phi, std::span<const double> psi,
                                     std::span<double> theta) const {
  for (std::size_t i = 0; i < interest_.size(); ++i) theta[interest_[i]] = phi[i];
  for (std::size_t i = 0; i < nuisance_.size(); ++i) theta[nuisance_[i]] = psi[i];
}

ParameterVector InterestPartition::compose(std::span<const double> phi, std::span<const double> psi) const {
  if (phi.size() != interest_.size() || psi.size() != nuisance_.size())
    throw InvalidInput("InterestPartition::compose: size mismatch");
  ParameterVector theta(dim_);
  compose_into(phi, psi, theta);
  return theta;
}

ParameterVector InterestPartition::interest_of(std::span<const double> theta) const {
  ParameterVector out;
  for (auto i : interest_) out.push_back(theta[i]);
  return out;
}

ParameterVector InterestPartition::nuisance_of(std::span<const double> theta) const {
  ParameterVector out;
  for (auto i : nuisance_) out.push_back(theta[i]);
  return out;
}

}  // namespace glp
