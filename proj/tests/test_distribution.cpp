#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pqpf/distribution.hpp"
#include "pqpf/errors.hpp"
#include "pqpf/gev.hpp"
#include "pqpf/rng.hpp"

using namespace pqpf;

TEST_CASE("empirical cdf counts members") {
  EmpiricalEnsemble d({1, 2, 3});
  CHECK(d.cdf(2) == doctest::Approx(2.0 / 3.0));
  CHECK(d.cdf(0.5) == 0.0);
  CHECK(d.cdf(3) == 1.0);
  CHECK(d.cdf_left(2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("empirical cdf equals brute-force counting for all small member sets") {
  // exhaustive over value alphabet {0, 1, 2.5} up to size 8
  const double alphabet[] = {0.0, 1.0, 2.5};
  for (int m = 1; m <= 8; ++m) {
    int combos = 1;
    for (int i = 0; i < m; ++i) combos *= 3;
    for (int code = 0; code < combos; ++code) {
      std::vector<double> members;
      int c = code;
      for (int i = 0; i < m; ++i) {
        members.push_back(alphabet[c % 3]);
        c /= 3;
      }
      EmpiricalEnsemble d(members);
      for (double x : {-0.5, 0.0, 0.5, 1.0, 2.0, 2.5, 3.0}) {
        int count = 0;
        for (double v : members) count += v <= x;
        CHECK(d.cdf(x) == doctest::Approx(double(count) / m));
      }
    }
  }
}

TEST_CASE("quantile with point mass at zero") {
  EmpiricalEnsemble d({0, 0, 4, 8});
  CHECK(d.quantile(0.5) == 0.0);
  CHECK(d.quantile(0.51) == 4.0);
  CHECK(d.quantile(0.99) == 8.0);
  CHECK_THROWS_AS(d.quantile(0.0), Error);
  CHECK_THROWS_AS(d.quantile(1.0), Error);
}

TEST_CASE("quantile returns zero below the point mass") {
  emos::CensoredGev d(-3, 2, 0.1);  // sizeable mass at zero
  double pz = d.prob_zero();
  CHECK(pz > 0.2);
  CHECK(d.quantile(0.5 * pz) == 0.0);
}

TEST_CASE("pop counts members at or above the threshold") {
  EmpiricalEnsemble d({0, 0.1, 0.5, 3});
  CHECK(d.pop() == doctest::Approx(0.5));
  EmpiricalEnsemble zeros({0, 0, 0});
  CHECK(zeros.pop() == 0.0);
  EmpiricalEnsemble at_threshold({0.2});
  CHECK(at_threshold.pop() == 1.0);  // >= 0.2 counts as occurrence
}

TEST_CASE("members must be valid") {
  CHECK_THROWS_AS(EmpiricalEnsemble({}), Error);
  CHECK_THROWS_AS(EmpiricalEnsemble({-1.0}), Error);
  CHECK_THROWS_AS(EmpiricalEnsemble({std::nan("")}), Error);
}

TEST_CASE("cdf is nondecreasing on a grid for randomized parameters") {
  SplitMix64 rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> members;
    int m = 1 + int(rng.uniform() * 20);
    for (int i = 0; i < m; ++i)
      members.push_back(rng.uniform() < 0.3 ? 0.0 : rng.uniform(0, 120));
    EmpiricalEnsemble emp(members);
    emos::CensoredGev gev(rng.uniform(-10, 30), rng.uniform(0.5, 20), rng.uniform(-0.25, 0.5));

    for (const PredictiveDistribution* d :
         {static_cast<const PredictiveDistribution*>(&emp),
          static_cast<const PredictiveDistribution*>(&gev)}) {
      double prev = -1;
      for (int i = 0; i < 1000; ++i) {
        double x = 500.0 * i / 999.0;
        double v = d->cdf(x);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
      }
    }
  }
}

TEST_CASE("quantile and cdf are generalized inverses") {
  SplitMix64 rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> members;
    int m = 1 + int(rng.uniform() * 12);
    for (int i = 0; i < m; ++i)
      members.push_back(rng.uniform() < 0.4 ? 0.0 : rng.uniform(0, 60));
    EmpiricalEnsemble emp(members);
    emos::CensoredGev gev(rng.uniform(-5, 20), rng.uniform(0.5, 10), rng.uniform(-0.25, 0.5));

    for (const PredictiveDistribution* d :
         {static_cast<const PredictiveDistribution*>(&emp),
          static_cast<const PredictiveDistribution*>(&gev)}) {
      for (int k = 1; k <= 99; ++k) {
        double p = k / 100.0;
        double q = d->quantile(p);
        CHECK(d->cdf(q) >= p - 1e-12);
        double delta = 1e-9 * (1.0 + q);
        if (q > 0) CHECK(d->cdf(q - delta) < p);
      }
    }
  }
}

TEST_CASE("epc empirical alias shares the implementation") {
  EpcEmpirical d({0, 0, 0, 10});
  CHECK(d.prob_zero() == doctest::Approx(0.75));
}
