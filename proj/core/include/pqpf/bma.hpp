#pragma once

#include <string>
#include <vector>

#include "pqpf/distribution.hpp"
#include "pqpf/types.hpp"

namespace pqpf::bma {

// Component group of a member: plain ensembles group by tag (exchangeable
// ENS members share one group), RMM members by "ORIGIN/TAG".
std::string group_key(const EnsembleMember& m);

struct BmaComponentParams {
  std::string group;
  // logistic model for the probability of no precipitation:
  // logit P(dry | x) = a0 + a1 x^{1/3} + a2 1{x < 0.2 mm}
  double a0 = 0;
  double a1 = 0;
  double a2 = 0;
  // Gamma mean on the cube-root scale: b0 + b1 x^{1/3}
  double b0 = 0.5;
  double b1 = 0.5;
};

struct BmaParams {
  std::vector<BmaComponentParams> components;
  std::vector<double> weights;  // simplex, aligned with components
  // shared Gamma variance on the cube-root scale: c0 + c1 x (raw member value)
  double c0 = 0.5;
  double c1 = 0.05;
};

// P(no precipitation | member value x).
double component_pop(const BmaComponentParams& comp, double x);

// Density in y (mm) of the positive-accumulation part: Gamma on the
// cube-root scale with mean b0 + b1 x^{1/3} and variance c0 + c1 x, mapped
// back with the change-of-variables factor.  Throws ComponentDomainError
// when the implied mean or variance is not positive.
double component_amount_density(const BmaComponentParams& comp, double c0, double c1, double x,
                                double y);

struct LogisticFit {
  double a0 = 0, a1 = 0, a2 = 0;
  double se0 = 0, se1 = 0, se2 = 0;
  int iterations = 0;
  bool converged = false;
};

// IRLS logistic regression of the dry indicator on (1, x^{1/3}, 1{x<0.2}).
LogisticFit fit_logistic_pop(const std::vector<double>& member_values,
                             const std::vector<bool>& dry);

struct BmaEmOptions {
  int max_iterations = 500;
  double rel_tol = 1e-6;
  double weight_floor = 1e-4;
  std::size_t min_training_pairs = 30;
};

struct BmaFit {
  BmaParams params;
  std::vector<double> loglik_trace;  // one entry per EM iteration, non-decreasing
  int iterations = 0;
  bool converged = false;
  bool point_mass_only = false;  // no wet observation in training
};

// Two-stage estimation: logistic coefficients per group first, then EM over
// weights (tied across exchangeable members), per-group Gamma mean
// coefficients by weighted regression, and the shared variance coefficients
// by weighted moment matching.
BmaFit fit_bma_em(const std::vector<EnsembleForecast>& forecasts,
                  const std::vector<double>& observations, const BmaEmOptions& options = {});

// One realized mixture component: group weight split over the group's
// members present in the forecast.
struct MixtureComponent {
  double weight = 0;
  double p0 = 0;     // point mass at zero
  double shape = 1;  // Gamma of the cube-root accumulation
  double scale = 1;
};

class BmaMixture final : public PredictiveDistribution {
 public:
  explicit BmaMixture(std::vector<MixtureComponent> components);

  double cdf(double x) const override;
  double quantile(double p) const override;
  double crps(double y) const override;  // adaptive quadrature, abs tol 1e-4 mm
  double pdf(double y) const;            // density on (0, inf)

  const std::vector<MixtureComponent>& components() const { return comps_; }

 private:
  std::vector<MixtureComponent> comps_;
};

// Mixture for one forecast; member tags must match the fitted groups.
BmaMixture predict_bma(const BmaParams& params, const EnsembleForecast& f);

// Reduced multi-model ensemble: per sub-ensemble the mean of the perturbed
// members (MEAN) and the control run (CNT), plus any high-resolution run.
EnsembleForecast build_rmm(const std::vector<EnsembleForecast>& sub_ensembles);

void save_bma_params(const std::string& path, const BmaParams& params);
BmaParams load_bma_params(const std::string& path);

}  // namespace pqpf::bma
