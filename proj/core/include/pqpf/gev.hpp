#pragma once

#include "pqpf/distribution.hpp"

namespace pqpf::emos {

// Plain GEV(mu, sigma, xi) primitives; sigma > 0.
double gev_cdf(double x, double mu, double sigma, double xi);
double gev_pdf(double x, double mu, double sigma, double xi);
double gev_quantile(double p, double mu, double sigma, double xi);

// Shape-parameter box: keeps the censored-GEV mean finite and the CRPS
// closed form well behaved.
inline constexpr double kXiMin = -0.278;
inline constexpr double kXiMax = 0.999;

// Exact CRPS of the GEV left-censored at zero against y >= 0, in
// incomplete-gamma (xi != 0) / exponential-integral (Gumbel) form.
// Requires sigma > 0 and xi < 1; throws InfiniteMeanError for xi >= 1.
double crps_censored_gev(double mu, double sigma, double xi, double y);

// GEV left-censored at zero: P(Y = 0) equals the plain GEV CDF at zero.
class CensoredGev final : public PredictiveDistribution {
 public:
  CensoredGev(double mu, double sigma, double xi);

  double cdf(double x) const override;
  double quantile(double p) const override;
  double crps(double y) const override;

  // density of the uncensored part on (0, inf)
  double pdf(double x) const;

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double xi() const { return xi_; }

 private:
  double mu_, sigma_, xi_;
};

}  // namespace pqpf::emos
