#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pqpf/errors.hpp"
#include "pqpf/gev.hpp"
#include "pqpf/rng.hpp"

using namespace pqpf;
using namespace pqpf::emos;

TEST_CASE("censored cdf at zero equals the plain GEV cdf, checked by quadrature") {
  CensoredGev d(10, 5, 0.2);
  double f0 = d.cdf(0);
  CHECK(f0 == doctest::Approx(gev_cdf(0, 10, 5, 0.2)));
  // density over (0, inf) carries the rest of the mass
  double upper = gev_quantile(1 - 1e-12, 10, 5, 0.2);
  double mass = oracles::integrate([&](double x) { return d.pdf(x); }, 0, upper, 1e-10);
  CHECK(mass == doctest::Approx(1.0 - f0).epsilon(1e-6));
}

TEST_CASE("pop cross-checked against quadrature mass below the threshold") {
  CensoredGev d(12, 4, 0.1);
  REQUIRE(d.prob_zero() < 0.05);
  double below = oracles::integrate([&](double x) { return d.pdf(x); }, 0, 0.2, 1e-12);
  CHECK(d.pop() == doctest::Approx(1.0 - d.prob_zero() - below).epsilon(1e-6));
}

TEST_CASE("gev quantile inverts the cdf") {
  for (double xi : {-0.2, 0.0, 0.3}) {
    for (double p : {0.05, 0.3, 0.5, 0.9, 0.99}) {
      double q = gev_quantile(p, 3, 2, xi);
      CHECK(gev_cdf(q, 3, 2, xi) == doctest::Approx(p).epsilon(1e-10));
    }
  }
}

TEST_CASE("degenerate scale limit: point mass on the observation") {
  // crps -> 0 as sigma -> 0 when mu = y > 0
  double prev = 1e9;
  for (double sigma : {1.0, 0.1, 0.01, 1e-4}) {
    double c = crps_censored_gev(7.0, sigma, 0.1, 7.0);
    CHECK(c < prev);
    prev = c;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("closed-form censored-GEV CRPS matches quadrature at a pinned case") {
  double closed = crps_censored_gev(10, 5, 0.2, 12);
  double quad = oracles::censored_gev_crps_quadrature(10, 5, 0.2, 12);
  CHECK(closed == doctest::Approx(quad).epsilon(1e-6));
}

TEST_CASE("closed-form censored-GEV CRPS matches quadrature over randomized draws") {
  SplitMix64 rng(31);
  for (int i = 0; i < 200; ++i) {
    double mu = rng.uniform(-5, 25);
    double sigma = rng.uniform(0.2, 12);
    double xi = rng.uniform(-0.25, 0.5);
    double y = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0, 60);
    double closed = crps_censored_gev(mu, sigma, xi, y);
    double quad = oracles::censored_gev_crps_quadrature(mu, sigma, xi, y);
    CHECK(std::fabs(closed - quad) <= 1e-6 * std::max({1e-6, std::fabs(closed), std::fabs(quad)}));
  }
}

TEST_CASE("Gumbel limit is continuous in the shape parameter") {
  for (double y : {0.0, 3.0, 12.0, 40.0}) {
    double at_zero = crps_censored_gev(10, 5, 0.0, y);
    CHECK(std::fabs(crps_censored_gev(10, 5, 1e-8, y) - at_zero) < 1e-5);
    CHECK(std::fabs(crps_censored_gev(10, 5, -1e-8, y) - at_zero) < 1e-5);
  }
}

TEST_CASE("CRPS is positively homogeneous in the mm scale") {
  SplitMix64 rng(17);
  for (int i = 0; i < 50; ++i) {
    double mu = rng.uniform(-3, 15);
    double sigma = rng.uniform(0.3, 8);
    double xi = rng.uniform(-0.25, 0.5);
    double y = rng.uniform(0, 40);
    double c = rng.uniform(0.1, 10);
    double base = crps_censored_gev(mu, sigma, xi, y);
    double scaled = crps_censored_gev(c * mu, c * sigma, xi, c * y);
    CHECK(scaled == doctest::Approx(c * base).epsilon(1e-9));
  }
}

TEST_CASE("entire support below zero collapses to a point mass at zero") {
  // upper end point mu - sigma/xi < 0
  CHECK(crps_censored_gev(-10, 1, -0.2, 3.5) == doctest::Approx(3.5));
  CHECK(crps_censored_gev(-10, 1, -0.2, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("infinite-mean shapes are rejected") {
  CHECK_THROWS_AS(crps_censored_gev(0, 1, 1.0, 1), InfiniteMeanError);
  CHECK_THROWS_AS(crps_censored_gev(0, 1, 1.7, 1), InfiniteMeanError);
  CHECK_THROWS_AS(CensoredGev(0, -1, 0.1), Error);
}
