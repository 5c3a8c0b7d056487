#include "pqpf/gev.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "pqpf/errors.hpp"

namespace pqpf::emos {

namespace {

constexpr double kXiTiny = 1e-12;     // below this the Gumbel branch is exact enough
constexpr double kEulerGamma = 0.57721566490153286060651209;
constexpr double kInf = std::numeric_limits<double>::infinity();

// t(x) = 1 + xi (x - mu) / sigma, the GEV support variable.
inline double t_of(double x, double mu, double sigma, double xi) {
  return 1.0 + xi * (x - mu) / sigma;
}

// u = t^{-1/xi} with overflow/underflow clamps; F = exp(-u).
inline double u_of_t(double t, double xi) {
  if (t <= 0.0) return xi > 0.0 ? kInf : 0.0;
  double e = -std::log(t) / xi;
  if (e > 700.0) return kInf;
  if (e < -745.0) return 0.0;
  return std::exp(e);
}

// lower incomplete gamma, saturated for large arguments
inline double gamma_lower(double s, double x) {
  if (x <= 0.0) return 0.0;
  if (!(x < 1e3)) return boost::math::tgamma(s);
  return boost::math::tgamma_lower(s, x);
}

// E1 evaluated from log(x), stable for extreme arguments.
inline double expint_e1_from_log(double log_x) {
  if (log_x > 690.0) return 0.0;                    // e^{-x} underflow region
  if (log_x < -690.0) return -kEulerGamma - log_x;  // E1(x) = -gamma - ln x + O(x)
  return boost::math::expint(1, std::exp(log_x));
}

}  // namespace

double gev_cdf(double x, double mu, double sigma, double xi) {
  if (std::fabs(xi) < kXiTiny) {
    double z = (x - mu) / sigma;
    if (z < -700.0) return 0.0;
    return std::exp(-std::exp(-z));
  }
  double u = u_of_t(t_of(x, mu, sigma, xi), xi);
  if (u == kInf) return 0.0;
  return std::exp(-u);
}

double gev_pdf(double x, double mu, double sigma, double xi) {
  if (std::fabs(xi) < kXiTiny) {
    double z = (x - mu) / sigma;
    if (z < -700.0 || z > 745.0) return 0.0;
    return std::exp(-z - std::exp(-z)) / sigma;
  }
  double t = t_of(x, mu, sigma, xi);
  if (t <= 0.0) return 0.0;
  double u = u_of_t(t, xi);
  if (u == kInf || u == 0.0) return 0.0;
  return u / t * std::exp(-u) / sigma;
}

double gev_quantile(double p, double mu, double sigma, double xi) {
  if (!(p > 0.0 && p < 1.0)) throw Error("quantile level must be in (0,1)");
  double w = -std::log(p);
  if (std::fabs(xi) < kXiTiny) return mu - sigma * std::log(w);
  return mu + sigma * (std::pow(w, -xi) - 1.0) / xi;
}

double crps_censored_gev(double mu, double sigma, double xi, double y) {
  if (!(sigma > 0.0)) throw Error("censored GEV requires sigma > 0");
  if (!(y >= 0.0)) throw Error("crps_censored_gev requires y >= 0");
  if (xi >= 1.0) throw InfiniteMeanError("censored GEV has no finite mean for xi >= 1");

  if (std::fabs(xi) < kXiTiny) {
    // Gumbel limit; all special-function arguments handled through logs.
    double log_uy = -(y - mu) / sigma;
    double log_2u0 = std::log(2.0) + mu / sigma;
    double e1_uy = expint_e1_from_log(log_uy);
    double e1_2u0 = expint_e1_from_log(log_2u0);
    return (mu - y) + sigma * (kEulerGamma - std::log(2.0)) + 2.0 * sigma * e1_uy -
           sigma * e1_2u0;
  }

  double t0 = t_of(0.0, mu, sigma, xi);
  if (xi < 0.0 && t0 <= 0.0) {
    // entire support below zero: the censored forecast is a point mass at 0
    return y;
  }

  double ty = t_of(y, mu, sigma, xi);
  double uy = u_of_t(ty, xi);
  double u0 = u_of_t(t0, xi);
  double fy = uy == kInf ? 0.0 : std::exp(-uy);
  double f0 = u0 == kInf ? 0.0 : std::exp(-u0);

  // (sigma/xi) [ t(y)(2F(y)-1) - F(0)^2 t(0) + 2 g(1-xi, u_y) - 2^xi g(1-xi, 2 u_0) ]
  // where g is the lower incomplete gamma function; t(y)(2F(y)-1) also covers
  // observations outside the support (F = 0 or 1 there).
  double s = 1.0 - xi;
  double a = ty * (2.0 * fy - 1.0) - f0 * f0 * t0;
  double g1 = gamma_lower(s, uy);
  double g2 = gamma_lower(s, 2.0 * u0);
  double crps = (sigma / xi) * (a + 2.0 * g1 - std::exp2(xi) * g2);
  // guard tiny negative values from cancellation
  return crps < 0.0 && crps > -1e-12 ? 0.0 : crps;
}

CensoredGev::CensoredGev(double mu, double sigma, double xi) : mu_(mu), sigma_(sigma), xi_(xi) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("censored GEV requires sigma > 0");
  if (!std::isfinite(mu) || !std::isfinite(xi)) throw Error("censored GEV parameters must be finite");
}

double CensoredGev::cdf(double x) const {
  if (x < 0.0) return 0.0;
  return gev_cdf(x, mu_, sigma_, xi_);
}

double CensoredGev::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw Error("quantile level must be in (0,1)");
  if (p <= prob_zero()) return 0.0;
  double q = gev_quantile(p, mu_, sigma_, xi_);
  return q < 0.0 ? 0.0 : q;
}

double CensoredGev::crps(double y) const { return crps_censored_gev(mu_, sigma_, xi_, y); }

double CensoredGev::pdf(double x) const {
  if (x <= 0.0) return 0.0;
  return gev_pdf(x, mu_, sigma_, xi_);
}

}  // namespace pqpf::emos
