#pragma once

#include <cstddef>
#include <vector>

namespace pqpf {

// Occurrence threshold defining the PoP event, mm.
inline constexpr double kPopThresholdMm = 0.2;

// A forecast CDF over nonnegative precipitation accumulations with a point
// mass at zero.  Implementations are immutable after construction and safe
// to share across threads.
class PredictiveDistribution {
 public:
  virtual ~PredictiveDistribution() = default;

  // P(Y <= x); right-continuous, zero for x < 0.
  virtual double cdf(double x) const = 0;

  // Left limit P(Y < x).  The default assumes the only atom sits at zero.
  virtual double cdf_left(double x) const;

  // Generalized inverse inf{x >= 0 : cdf(x) >= p} for p in (0,1); returns 0
  // whenever p <= prob_zero.
  virtual double quantile(double p) const = 0;

  // CRPS against an observation y >= 0.
  virtual double crps(double y) const = 0;

  double prob_zero() const { return cdf(0.0); }

  // P(Y >= threshold), i.e. 1 - cdf_left(threshold): the point mass at zero
  // never counts as occurrence.
  double pop() const { return 1.0 - cdf_left(pop_threshold_); }

  double median() const { return quantile(0.5); }

  double pop_threshold() const { return pop_threshold_; }
  void set_pop_threshold(double t) { pop_threshold_ = t; }

 private:
  double pop_threshold_ = kPopThresholdMm;
};

// Empirical CDF of an ensemble (raw ensembles and EPC member lists).
class EmpiricalEnsemble final : public PredictiveDistribution {
 public:
  explicit EmpiricalEnsemble(std::vector<double> members);

  double cdf(double x) const override;       // #{members <= x} / m
  double cdf_left(double x) const override;  // #{members < x} / m
  double quantile(double p) const override;
  double crps(double y) const override;      // mean|x_i-y| - sum|x_i-x_j| / (2 m^2)

  const std::vector<double>& members() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
  double pair_diff_term_ = 0;  // sum_{ij} |x_i - x_j| / (2 m^2)
};

// The EPC benchmark is served through the same empirical machinery.
using EpcEmpirical = EmpiricalEnsemble;

}  // namespace pqpf
