#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "pqpf/errors.hpp"
#include "pqpf/ingest.hpp"
#include "pqpf/rng.hpp"

using namespace pqpf;
using namespace pqpf::ingest;

namespace {

Site test_site() { return Site::station("S1", 0.125, 10.125, Region::WestSahel); }

RawForecastRecord rec(const char* init, int lead, const char* tag, double accum) {
  return {"ECMWF", parse_time(init), lead, 0.125, 10.125, tag, accum};
}

}  // namespace

TEST_CASE("lead pairs follow the initialization rules") {
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  // 00 UTC run of the previous day: leads 6 and 30
  auto p00 = lead_pair(parse_time("2014-08-09T00:00:00Z"), w);
  CHECK(p00 == std::pair<int, int>{6, 30});
  // 12 UTC run two days earlier: leads 18 and 42
  auto p12 = lead_pair(parse_time("2014-08-08T12:00:00Z"), w);
  CHECK(p12 == std::pair<int, int>{18, 42});
  // 06 UTC run at the window start: leads 0 and 24
  auto p06 = lead_pair(parse_time("2014-08-09T06:00:00Z"), w);
  CHECK(p06 == std::pair<int, int>{0, 24});

  // longer windows extend the upper lead by 24 h per day
  AccumulationWindow w5 = AccumulationWindow::ending_on(make_date(2014, 8, 14), 5);
  REQUIRE(w5.valid_start == w.valid_start);
  CHECK(lead_pair(parse_time("2014-08-09T00:00:00Z"), w5) == std::pair<int, int>{6, 126});
  CHECK(lead_pair(parse_time("2014-08-09T06:00:00Z"), w5) == std::pair<int, int>{0, 120});

  // a run that does not select this window start is rejected
  CHECK_THROWS_AS(lead_pair(parse_time("2014-08-09T12:00:00Z"), w), Error);
}

TEST_CASE("derive_window_forecast differences the accumulations") {
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  auto f = derive_window_forecast({rec("2014-08-09T00:00:00Z", 6, "ENS01", 2.0),
                                   rec("2014-08-09T00:00:00Z", 30, "ENS01", 12.0)},
                                  test_site(), w);
  REQUIRE(f.members.size() == 1);
  CHECK(f.members[0].value == doctest::Approx(10.0));
  CHECK(f.members[0].tag == MemberTag::Ens);
  CHECK(f.source == "ECMWF");
}

TEST_CASE("derive_window_forecast handles the 06 UTC zero lead implicitly") {
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  auto f = derive_window_forecast({rec("2014-08-09T06:00:00Z", 24, "CNT", 7.5)}, test_site(), w);
  CHECK(f.members[0].value == doctest::Approx(7.5));
  CHECK(f.members[0].tag == MemberTag::Cnt);
}

TEST_CASE("derive_window_forecast error paths") {
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  // missing upper lead
  CHECK_THROWS_AS(
      derive_window_forecast({rec("2014-08-09T00:00:00Z", 6, "ENS01", 2.0)}, test_site(), w),
      MissingLeadError);
  // missing lower lead
  CHECK_THROWS_AS(
      derive_window_forecast({rec("2014-08-09T00:00:00Z", 30, "ENS01", 2.0)}, test_site(), w),
      MissingLeadError);
  // negative difference within rounding noise floors to zero
  auto f = derive_window_forecast({rec("2014-08-09T00:00:00Z", 6, "ENS01", 2.0),
                                   rec("2014-08-09T00:00:00Z", 30, "ENS01", 1.96)},
                                  test_site(), w);
  CHECK(f.members[0].value == 0.0);
  // beyond the noise floor it is an inconsistency
  CHECK_THROWS_AS(derive_window_forecast({rec("2014-08-09T00:00:00Z", 6, "ENS01", 2.0),
                                          rec("2014-08-09T00:00:00Z", 30, "ENS01", 1.5)},
                                         test_site(), w),
                  InconsistentAccumulationError);
}

TEST_CASE("window forecasts are additive over consecutive days") {
  // the 2-day forecast equals the sum of the two 1-day forecasts of one run
  const char* init = "2014-08-09T00:00:00Z";
  std::vector<RawForecastRecord> records{rec(init, 6, "ENS01", 1.0), rec(init, 30, "ENS01", 4.5),
                                         rec(init, 54, "ENS01", 9.25)};
  auto day1 = derive_window_forecast(records, test_site(),
                                     AccumulationWindow::ending_on(make_date(2014, 8, 10), 1));
  // the second 1-day slice of the same run, differenced by hand
  double day2 = 9.25 - 4.5;
  auto two_day = derive_window_forecast(records, test_site(),
                                        AccumulationWindow::ending_on(make_date(2014, 8, 11), 2));
  CHECK(two_day.members[0].value ==
        doctest::Approx(day1.members[0].value + day2).epsilon(1e-9));
}

TEST_CASE("nearest neighbor selects the containing cell") {
  GridSpec g;
  g.origin_lon = 0.125;
  g.origin_lat = 10.125;
  g.dlon = g.dlat = 0.25;
  g.nx = 20;
  g.ny = 12;
  g.step_hours = 3;
  g.start_time = parse_time("2014-08-01T00:00:00Z");

  // station at a cell center
  CHECK(nearest_neighbor(g, Site::station("a", 0.625, 10.625, Region::Other)) ==
        CellIndex{2, 2});
  // edge midpoint resolves to the smaller index
  CHECK(nearest_neighbor(g, Site::station("b", 0.25, 10.125, Region::Other)) == CellIndex{0, 0});
  CHECK(nearest_neighbor(g, Site::station("c", 0.125, 10.25, Region::Other)) == CellIndex{0, 0});
  // outside the domain
  CHECK_THROWS_AS(nearest_neighbor(g, Site::station("d", 40.0, 10.0, Region::Other)),
                  OutOfDomainError);
}

TEST_CASE("nearest neighbor agrees with a brute-force scan") {
  GridSpec g;
  g.origin_lon = -10.0;
  g.origin_lat = 4.0;
  g.dlon = 0.5;
  g.dlat = 0.4;
  g.nx = 30;
  g.ny = 25;
  g.step_hours = 3;
  SplitMix64 rng = SplitMix64(5);
  for (int i = 0; i < 300; ++i) {
    double lon = g.origin_lon + rng.uniform(-0.2, (g.nx - 1) * g.dlon + 0.2);
    double lat = g.origin_lat + rng.uniform(-0.1, (g.ny - 1) * g.dlat + 0.1);
    Site s = Site::station("r", lon, lat, Region::Other);
    CellIndex got = nearest_neighbor(g, s);
    double best = 1e18;
    CellIndex want{0, 0};
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        double dx = g.lon_of(ix) - lon, dy = g.lat_of(iy) - lat;
        double d = dx * dx + dy * dy;
        if (d < best - 1e-15) {
          best = d;
          want = {ix, iy};
        }
      }
    }
    CHECK(got == want);
  }
}

namespace {

GriddedField constant_field(double value_per_step, int steps) {
  GriddedField f;
  f.spec.origin_lon = 0.125;
  f.spec.origin_lat = 10.125;
  f.spec.dlon = f.spec.dlat = 0.25;
  f.spec.nx = 8;
  f.spec.ny = 6;
  f.spec.step_hours = 3;
  f.spec.start_time = parse_time("2014-08-09T06:00:00Z");
  for (int s = 0; s < steps; ++s)
    f.steps[s] = std::vector<double>(std::size_t(f.spec.nx) * f.spec.ny, value_per_step);
  return f;
}

}  // namespace

TEST_CASE("temporal aggregation weights the endpoint steps by one half") {
  auto f = constant_field(1.0, 9);
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  // 9 stamps touched: 0.5 + 7 + 0.5 = 8 mm
  CHECK(aggregate_temporal(f, w, {3, 3}) == doctest::Approx(8.0));

  auto zeros = constant_field(0.0, 9);
  CHECK(aggregate_temporal(zeros, w, {0, 0}) == 0.0);

  auto single = constant_field(0.0, 9);
  single.steps[4][std::size_t(3) * single.spec.nx + 2] = 5.0;  // wet interior step
  CHECK(aggregate_temporal(single, w, {2, 3}) == doctest::Approx(5.0));
}

TEST_CASE("constant fields aggregate to exactly 8 mm per day per unit step") {
  for (int days = 1; days <= 5; ++days) {
    auto f = constant_field(1.5, 8 * days + 1);
    AccumulationWindow w =
        AccumulationWindow::ending_on(make_date(2014, 8, 9) + std::chrono::days{days}, days);
    CHECK(aggregate_temporal(f, w, {1, 1}) == doctest::Approx(8.0 * days * 1.5));
  }
}

TEST_CASE("gaps in the field are reported") {
  auto f = constant_field(1.0, 9);
  f.steps.erase(4);
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  CHECK_THROWS_AS(aggregate_temporal(f, w, {0, 0}), GapError);
}

TEST_CASE("spatial aggregation means the contained cells") {
  auto f = constant_field(3.0 / 8.0, 9);  // 3 mm per day per cell
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  // 1x1 degree box over a uniform field
  Box box{0.0, 10.0, 1.0, 1.0};
  CHECK(aggregate_spatial(f, w, box) == doctest::Approx(3.0));

  // 2-cell box averaging {2, 4}
  auto g = constant_field(0.0, 9);
  for (int s = 0; s < 9; ++s) {
    g.steps[s][0] = 2.0 / 8.0;
    g.steps[s][1] = 4.0 / 8.0;
  }
  Box two{0.0, 10.0, 0.5, 0.25};
  CHECK(aggregate_spatial(g, w, two) == doctest::Approx(3.0));

  CHECK_THROWS_AS(aggregate_spatial(f, w, Box{50, 50, 1, 1}), EmptyBoxError);
}

TEST_CASE("five-by-two box equals the brute-force mean over member cells") {
  GriddedField f = constant_field(0.0, 9);
  SplitMix64 rng(11);
  for (auto& [step, values] : f.steps)
    for (auto& v : values) v = rng.uniform(0, 4);
  AccumulationWindow w = AccumulationWindow::ending_on(make_date(2014, 8, 10), 1);
  Box box{0.0, 10.0, 2.0, 1.0};
  auto cells = cells_in_box(f.spec, box);
  REQUIRE(!cells.empty());
  double sum = 0;
  for (auto c : cells) sum += aggregate_temporal(f, w, c);
  CHECK(aggregate_spatial(f, w, box) == doctest::Approx(sum / cells.size()).epsilon(1e-12));
}

namespace {

StationSeries series_with(std::vector<double> values, int year = 2014) {
  StationSeries s;
  s.site = test_site();
  Date d = monsoon_start(year);
  for (double v : values) {
    s.days[d] = v;
    d += std::chrono::days{1};
  }
  return s;
}

}  // namespace

TEST_CASE("quality control checks the Appendix tests") {
  // full coverage, right-skewed, with dry days: passes
  std::vector<double> good;
  for (int i = 0; i < kMonsoonLengthDays; ++i) good.push_back(i % 3 == 0 ? 12.0 : 0.0);
  QcReport ok = quality_control(series_with(good), {2014});
  CHECK(ok.pass());

  // range failure at 2000 mm
  std::vector<double> range = good;
  range[7] = 2000.0;
  QcReport r1 = quality_control(series_with(range), {2014});
  CHECK_FALSE(r1.range.pass);
  CHECK_FALSE(r1.pass());

  // 70% availability in one season
  std::vector<double> short_series(kMonsoonLengthDays * 7 / 10, 1.0);
  for (std::size_t i = 0; i < short_series.size(); i += 4) short_series[i] = 0.0;
  QcReport r2 = quality_control(series_with(short_series), {2014});
  CHECK_FALSE(r2.availability.pass);

  // symmetric series: median equals mean, not right-skewed
  std::vector<double> sym;
  for (int i = 0; i < kMonsoonLengthDays; ++i) sym.push_back(double(i % 3) * 10.0);
  QcReport r3 = quality_control(series_with(sym), {2014});
  CHECK(r3.skewness.detail.find("median") != std::string::npos);
  CHECK_FALSE(r3.skewness.pass);

  // no dry day
  std::vector<double> wet(kMonsoonLengthDays, 5.0);
  QcReport r4 = quality_control(series_with(wet), {2014});
  CHECK_FALSE(r4.zero_mass.pass);
  CHECK(r4.skewness.pass == false);  // constant series is not right-skewed either
}

TEST_CASE("quality control is insensitive to record order") {
  std::vector<double> values;
  for (int i = 0; i < kMonsoonLengthDays; ++i) values.push_back(i % 5 == 0 ? 0.0 : (i % 7) * 3.0);
  StationSeries forward = series_with(values);
  StationSeries reversed;
  reversed.site = forward.site;
  for (auto it = forward.days.rbegin(); it != forward.days.rend(); ++it)
    reversed.days.insert(*it);
  QcReport a = quality_control(forward, {2014});
  QcReport b = quality_control(reversed, {2014});
  CHECK(a.pass() == b.pass());
  CHECK(a.skewness.detail == b.skewness.detail);
}

TEST_CASE("csv round trips preserve records") {
  std::string dir = std::filesystem::temp_directory_path() / "pqpf_ingest_test";
  std::filesystem::create_directories(dir);

  std::vector<RawForecastRecord> records{rec("2014-08-09T00:00:00Z", 6, "ENS01", 2.0),
                                         rec("2014-08-09T00:00:00Z", 30, "HRES", 12.25)};
  write_forecast_csv(dir + "/f.csv", records);
  auto back = read_forecast_csv(dir + "/f.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].member_tag == "HRES");
  CHECK(back[1].accum_mm == doctest::Approx(12.25));
  CHECK(back[0].init_time == records[0].init_time);

  GriddedField f = constant_field(1.25, 3);
  write_gridded(dir + "/field", f);
  GriddedField g = read_gridded(dir + "/field");
  CHECK(g.spec.nx == f.spec.nx);
  CHECK(g.steps.size() == 3);
  CHECK(g.value(1, {4, 2}) == doctest::Approx(1.25));

  std::filesystem::remove_all(dir);
}
