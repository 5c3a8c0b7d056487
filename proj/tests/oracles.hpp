#pragma once

// Test-only oracles, kept independent of the implementation paths they
// check: plain recursive Simpson quadrature and exact piecewise integration
// of the defining CRPS integral.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pqpf/distribution.hpp"
#include "pqpf/gev.hpp"

namespace oracles {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double eps, int depth) {
  double m = 0.5 * (a + b);
  double flm = f(0.5 * (a + m));
  double frm = f(0.5 * (m + b));
  double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15 * eps)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, eps / 2, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, eps / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double eps = 1e-10) {
  if (b <= a) return 0.0;
  double m = 0.5 * (a + b);
  return simpson_rec(f, a, b, f(a), f(m), f(b), eps, 60);
}

// CRPS of an arbitrary CDF by numerical integration of the defining
// integral; `upper` must lie far enough in the tail.
inline double crps_by_quadrature(const std::function<double(double)>& cdf, double y,
                                 double upper, double eps = 1e-10) {
  double below = integrate([&](double x) { double v = cdf(x); return v * v; }, 0.0, y, eps);
  double above = integrate([&](double x) { double v = 1.0 - cdf(x); return v * v; }, y,
                           std::max(upper, y), eps);
  return below + above;
}

inline double censored_gev_crps_quadrature(double mu, double sigma, double xi, double y) {
  auto cdf = [&](double x) { return x < 0 ? 0.0 : pqpf::emos::gev_cdf(x, mu, sigma, xi); };
  double upper;
  if (xi < 0) {
    upper = mu - sigma / xi;  // finite right endpoint
  } else {
    upper = std::max(y, mu + sigma);
    while (1.0 - cdf(upper) > 1e-9 && upper < 1e9) upper *= 2.0;
  }
  return crps_by_quadrature(cdf, y, std::max(upper, y));
}

// Exact integral of [F(x) - 1(x >= y)]^2 for an empirical ensemble CDF,
// via its piecewise-constant segments; member counting is done here, not
// through the implementation under test.
inline double ensemble_crps_by_segments(std::vector<double> members, double y) {
  std::vector<double> edges = members;
  edges.push_back(0.0);
  edges.push_back(y);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double total = 0;
  const double m = double(members.size());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double lo = edges[i], hi = edges[i + 1];
    double mid = 0.5 * (lo + hi);
    double count = 0;
    for (double v : members) count += v <= mid;
    double f = count / m;
    double ind = mid >= y ? 1.0 : 0.0;
    total += (f - ind) * (f - ind) * (hi - lo);
  }
  return total;
}

// O(m^2) double sum, straight from the formula.
inline double ensemble_crps_double_sum(const std::vector<double>& members, double y) {
  const double m = double(members.size());
  double first = 0, second = 0;
  for (double a : members) first += std::fabs(a - y);
  for (double a : members)
    for (double b : members) second += std::fabs(a - b);
  return first / m - second / (2.0 * m * m);
}

}  // namespace oracles
