#include "pqpf/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "pqpf/errors.hpp"

namespace pqpf {

double PredictiveDistribution::cdf_left(double x) const {
  if (x <= 0.0) return 0.0;
  return cdf(x);
}

EmpiricalEnsemble::EmpiricalEnsemble(std::vector<double> members) : sorted_(std::move(members)) {
  if (sorted_.empty()) throw Error("empirical ensemble must have at least one member");
  for (double v : sorted_) {
    if (!std::isfinite(v) || v < 0.0)
      throw Error("empirical ensemble members must be finite and nonnegative");
  }
  std::sort(sorted_.begin(), sorted_.end());
  const std::size_t m = sorted_.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) sum += std::fabs(sorted_[i] - sorted_[j]);
  pair_diff_term_ = sum / (2.0 * double(m) * double(m));
}

double EmpiricalEnsemble::cdf(double x) const {
  if (x < sorted_.front()) return 0.0;
  auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return double(it - sorted_.begin()) / double(sorted_.size());
}

double EmpiricalEnsemble::cdf_left(double x) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
  return double(it - sorted_.begin()) / double(sorted_.size());
}

double EmpiricalEnsemble::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw Error("quantile level must be in (0,1)");
  const std::size_t m = sorted_.size();
  double k = std::ceil(p * double(m) - 1e-9);
  std::size_t idx = k < 1.0 ? 0 : std::size_t(k) - 1;
  if (idx >= m) idx = m - 1;
  return sorted_[idx];
}

double EmpiricalEnsemble::crps(double y) const {
  double mean_abs = 0.0;
  for (double v : sorted_) mean_abs += std::fabs(v - y);
  mean_abs /= double(sorted_.size());
  return mean_abs - pair_diff_term_;
}

}  // namespace pqpf
