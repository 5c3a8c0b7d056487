#include <doctest.h>

#include "pqpf/climatology.hpp"
#include "pqpf/errors.hpp"

using namespace pqpf;
using namespace pqpf::climatology;

namespace {

// complete archive: every day of every year in [first, last] observed
ingest::StationSeries full_archive(int first_year, int last_year) {
  ingest::StationSeries s;
  s.site = Site::station("S1", -2.0, 12.0, Region::WestSahel);
  for (int y = first_year; y <= last_year; ++y) {
    for (Date d = make_date(y, 1, 1); d <= make_date(y, 12, 31); d += std::chrono::days{1}) {
      s.days[d] = double((d.time_since_epoch().count() % 7 == 0) ? 0 : d.time_since_epoch().count() % 23);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("member counts follow history x (2 window + 1)") {
  auto archive = full_archive(1984, 2014);
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);

  EpcForecast epc = build_epc(archive, w, {30, 2});
  CHECK(epc.members.size() == 150);  // 30 years x 5 calendar days

  EpcForecast plain = build_epc(archive, w, {30, 0});
  CHECK(plain.members.size() == 30);  // plain probabilistic climatology

  auto one_year = full_archive(2013, 2014);
  EpcForecast small = build_epc(one_year, w, {30, 2});
  CHECK(small.members.size() == 5);  // a single prior year contributes 5
}

TEST_CASE("the verification year never contributes") {
  auto archive = full_archive(2004, 2014);
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  for (int day_window : {0, 2, 7}) {
    EpcForecast epc = build_epc(archive, w, {30, day_window});
    // recompute by scanning the archive for the member values; any member
    // equal to a 2014 value at matching calendar distance would be legal only
    // if it also exists in a prior year, so check by construction instead
    int count_2014 = 0;
    for (const auto& [d, v] : archive.days) {
      if (year_of(d) == 2014 && calendar_distance(d, w.first_obs_day()) <= day_window)
        ++count_2014;
    }
    CHECK(count_2014 == day_window * 2 + 1);  // they exist in the archive
    CHECK(epc.members.size() == std::size_t(10 * (2 * day_window + 1)));  // but are excluded
  }
}

TEST_CASE("multi-day windows sum consecutive days from the matched start") {
  auto archive = full_archive(2012, 2014);
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 12), 3);
  EpcForecast epc = build_epc(archive, w, {30, 0});
  REQUIRE(epc.members.size() == 2);
  // matched calendar day is 10 Aug (first obs day); members are 3-day sums
  for (int y : {2012, 2013}) {
    double want = archive.days.at(make_date(y, 8, 10)) + archive.days.at(make_date(y, 8, 11)) +
                  archive.days.at(make_date(y, 8, 12));
    bool found = false;
    for (double m : epc.members) found |= m == doctest::Approx(want);
    CHECK(found);
  }
}

TEST_CASE("adjacent days share most of their members") {
  auto archive = full_archive(2004, 2014);
  EpcConfig cfg{10, 2};
  auto a = build_epc(archive, AccumulationWindow::ending_on(make_date(2014, 8, 10), 1), cfg);
  auto b = build_epc(archive, AccumulationWindow::ending_on(make_date(2014, 8, 11), 1), cfg);
  std::multiset<double> ma(a.members.begin(), a.members.end());
  std::multiset<double> mb(b.members.begin(), b.members.end());
  std::size_t overlap = 0;
  for (double v : ma) {
    auto it = mb.find(v);
    if (it != mb.end()) {
      mb.erase(it);
      ++overlap;
    }
  }
  CHECK(overlap >= std::size_t(2 * cfg.day_window * cfg.history_years));
}

TEST_CASE("missing history shrinks the member set and is reported") {
  auto archive = full_archive(2012, 2014);
  // drop one historical day inside the window
  archive.days.erase(make_date(2013, 8, 9));
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  EpcForecast epc = build_epc(archive, w, {30, 2});
  CHECK(epc.members.size() == 9);
  CHECK(epc.dropped_slots == 1);
}

TEST_CASE("an empty history is an error") {
  auto archive = full_archive(2014, 2014);  // verification year only
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  CHECK_THROWS_AS(build_epc(archive, w, {30, 2}), InsufficientHistoryError);
}

TEST_CASE("epc serves the empirical distribution") {
  EpcForecast epc;
  epc.members = {0, 0, 0, 10};
  auto d = epc_as_distribution(epc);
  CHECK(d->prob_zero() == doctest::Approx(0.75));

  EpcForecast flat;
  flat.members = std::vector<double>(12, 5.0);
  auto dd = epc_as_distribution(flat);
  CHECK(dd->median() == 5.0);
  for (double y : {0.0, 3.0, 5.0, 11.0}) {
    CHECK(dd->crps(y) == doctest::Approx(std::fabs(5.0 - y)));
  }
}
