#include "glp/models/cmp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "glp/errors.hpp"

namespace glp::cmp {
namespace {

constexpr std::uint64_t kTableSize = 4096;

const std::vector<double>& log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize, 0.0);
    for (std::uint64_t y = 2; y < kTableSize; ++y) t[y] = t[y - 1] + std::log(static_cast<double>(y));
    return t;
  }();
  return table;
}

}  // namespace

void CmpParams::validate() const {
  if (!(lambda > 0.0) || !(nu > 0.0) || !std::isfinite(lambda) || !std::isfinite(nu))
    throw InvalidInput("CmpParams: need lambda > 0 and nu > 0");
}

CountDataset::CountDataset(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw InvalidInput("CountDataset: need at least one observation");
  max_ = *std::max_element(counts_.begin(), counts_.end());
  histogram_.assign(max_ + 1, 0);
  for (auto y : counts_) ++histogram_[y];
}

double log_factorial(std::uint64_t y) {
  const auto& table = log_factorial_table();
  if (y < kTableSize) return table[y];
  double acc = table.back();
  for (std::uint64_t k = kTableSize; k <= y; ++k) acc += std::log(static_cast<double>(k));
  return acc;
}

double cmp_log_unnorm(std::uint64_t y, const CmpParams& params) {
  if (y == 0) return 0.0;
  return static_cast<double>(y) * std::log(params.lambda) - params.nu * log_factorial(y);
}

Normalizer cmp_log_normalizer(const CmpParams& params, double tail_tol) {
  params.validate();
  if (!(tail_tol > 0.0)) throw InvalidInput("cmp_normalizer: tail_tol must be positive");
  const double log_lambda = std::log(params.lambda);

  // Running sum of exp(term - shift), rescaled whenever a larger term appears.
  double shift = 0.0;
  double sum = 0.0;
  double log_term = 0.0;
  for (std::uint64_t y = 0;; ++y) {
    log_term = cmp_log_unnorm(y, params);
    if (log_term > shift) {
      sum *= std::exp(shift - log_term);
      shift = log_term;
    }
    sum += std::exp(log_term - shift);

    const double log_ratio = log_lambda - params.nu * std::log(static_cast<double>(y + 1));
    if (log_ratio < 0.0) {
      const double ratio = std::exp(log_ratio);
      const double tail = std::exp(log_term - shift) * ratio / (1.0 - ratio);
      if (tail < tail_tol * sum) {
        return {shift + std::log(sum), tail / sum, y};
      }
    }
  }
}

double cmp_normalizer(const CmpParams& params, double tail_tol) {
  return std::exp(cmp_log_normalizer(params, tail_tol).log_value);
}

CmpSampler::CmpSampler(const CmpParams& params, double tail_tol) {
  const Normalizer z = cmp_log_normalizer(params, tail_tol);
  cdf_.resize(z.last_term + 1);
  double acc = 0.0;
  for (std::uint64_t y = 0; y <= z.last_term; ++y) {
    acc += std::exp(cmp_log_unnorm(y, params) - z.log_value);
    cdf_[y] = acc;
  }
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::uint64_t CmpSampler::operator()(RngStream& stream) const {
  const double u = stream.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
}

CountDataset cmp_sample(std::size_t n, const CmpParams& params, RngStream& stream, double tail_tol) {
  if (n < 1) throw InvalidInput("cmp_sample: n must be at least 1");
  const CmpSampler sampler(params, tail_tol);
  std::vector<std::uint64_t> counts(n);
  for (auto& y : counts) y = sampler(stream);
  return CountDataset(std::move(counts));
}

double dfd_loss(const CountDataset& data, const CmpParams& params) {
  params.validate();
  const double log_lambda = std::log(params.lambda);
  const auto& hist = data.histogram();
  const double wrap = std::exp(cmp_log_unnorm(data.max_value(), params));  // p(max) / p(0)

  double sum = 0.0;
  for (std::uint64_t v = 0; v < hist.size(); ++v) {
    if (hist[v] == 0) continue;
    const double backward = v == 0 ? wrap : std::exp(params.nu * std::log(static_cast<double>(v)) - log_lambda);
    const double forward = std::exp(params.nu * std::log(static_cast<double>(v + 1)) - log_lambda);
    sum += static_cast<double>(hist[v]) * (backward * backward - 2.0 * forward);
  }
  return sum / static_cast<double>(data.size());
}

double cmp_neg_log_likelihood(const CountDataset& data, const CmpParams& params, double tail_tol) {
  const double log_z = cmp_log_normalizer(params, tail_tol).log_value;
  const auto& hist = data.histogram();
  double sum = 0.0;
  for (std::uint64_t v = 0; v < hist.size(); ++v)
    if (hist[v] > 0) sum += static_cast<double>(hist[v]) * cmp_log_unnorm(v, params);
  return static_cast<double>(data.size()) * log_z - sum;
}

ParameterSpace cmp_parameter_space() { return ParameterSpace({"lambda", "nu"}, {1.0, 1.0}, {20.0, 8.0}); }

CmpModel::CmpModel(std::size_t n, ParameterSpace space, double tail_tol)
    : n_(n), space_(std::move(space)), tail_tol_(tail_tol) {
  if (n_ < 1) throw InvalidInput("CmpModel: n must be at least 1");
  if (space_.dim() != 2) throw InvalidInput("CmpModel: parameter space must be (lambda, nu)");
}

CountDataset CmpModel::simulate(std::span<const double> theta, RngStream& stream) const {
  return cmp_sample(n_, CmpParams{theta[0], theta[1]}, stream, tail_tol_);
}

Objective CmpModel::simulate_loss(std::span<const double> theta, RngStream stream) const {
  return dfd_objective(simulate(theta, stream));
}

Objective dfd_objective(CountDataset data) {
  auto shared = std::make_shared<const CountDataset>(std::move(data));
  return [shared](std::span<const double> theta) { return dfd_loss(*shared, CmpParams{theta[0], theta[1]}); };
}

Objective nll_objective(CountDataset data, double tail_tol) {
  auto shared = std::make_shared<const CountDataset>(std::move(data));
  return [shared, tail_tol](std::span<const double> theta) {
    return cmp_neg_log_likelihood(*shared, CmpParams{theta[0], theta[1]}, tail_tol);
  };
}

CountDataset read_counts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open count file " + path.string());
  std::vector<std::uint64_t> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    long long value = -1;
    std::string rest;
    if (!(ss >> value) || value < 0 || (ss >> rest))
      throw InvalidInput("count file " + path.string() + ": bad value on line " + std::to_string(line_no));
    counts.push_back(static_cast<std::uint64_t>(value));
  }
  return CountDataset(std::move(counts));
}

void write_counts(const std::filesystem::path& path, const CountDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write count file " + path.string());
  for (auto y : data.counts()) out << y << '\n';
  if (!out) throw IoError("error writing count file " + path.string());
}

}  // namespace glp::cmp
