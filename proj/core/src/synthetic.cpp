#include "pqpf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "pqpf/errors.hpp"
#include "pqpf/rng.hpp"

namespace pqpf::pipeline {

namespace {

constexpr std::uint64_t kSaltLatent = 1;
constexpr std::uint64_t kSaltTruth = 2;
constexpr std::uint64_t kSaltBlur = 3;
constexpr std::uint64_t kSaltMemberBase = 1000;

constexpr double kGammaShape = 0.8;
constexpr double kBaseScaleMm = 9.0;

struct RegionBox {
  Region region;
  const char* prefix;
  double lon0, lon1, lat0, lat1;
};

constexpr RegionBox kRegionBoxes[] = {
    {Region::WestSahel, "WS", -15.0, 5.0, 10.0, 16.0},
    {Region::EastSahel, "ES", 15.0, 35.0, 10.0, 16.0},
    {Region::GuineaCoast, "GC", -10.0, 8.0, 5.0, 9.0},
};

struct SiteClimate {
  double wet_mult = 1.0;
  double scale_mult = 1.0;
};

SiteClimate site_climate(const SyntheticScenario& sc, const std::string& site_id) {
  SplitMix64 rng(derive_seed(sc.seed, site_id, 0, 77));
  return {0.85 + 0.3 * rng.uniform(), 0.8 + 0.4 * rng.uniform()};
}

struct DayState {
  double pop = 0;
  double scale = 0;  // Gamma scale of wet amounts
};

DayState day_state(const SyntheticScenario& sc, const SiteClimate& clim, double potential) {
  DayState s;
  s.pop = std::clamp(sc.wet_fraction * clim.wet_mult * potential, 0.02, 0.98);
  // sublinear coupling keeps the climatological tail moderate
  s.scale = kBaseScaleMm * clim.scale_mult * std::pow(potential, 0.7);
  return s;
}

double potential(const SyntheticScenario& sc, const std::string& site_id, Date d,
                 std::uint64_t salt) {
  SplitMix64 rng(derive_seed(sc.seed, site_id, d.time_since_epoch().count(), salt));
  // lognormal with unit mean
  double ps = sc.potential_sigma;
  return std::exp(ps * rng.normal() - 0.5 * ps * ps);
}

double draw_amount(const DayState& s, SplitMix64& rng) {
  if (rng.uniform() >= s.pop) return 0.0;
  return rng.gamma(kGammaShape, s.scale);
}

double truth_value(const SyntheticScenario& sc, const SiteClimate& clim,
                   const std::string& site_id, Date d) {
  DayState s = day_state(sc, clim, potential(sc, site_id, d, kSaltLatent));
  SplitMix64 rng(derive_seed(sc.seed, site_id, d.time_since_epoch().count(), kSaltTruth));
  return draw_amount(s, rng);
}

// daily value of one member for one target day; identical across init times
double member_daily(const SyntheticScenario& sc, const SiteClimate& clim,
                    const std::string& site_id, Date d, int member) {
  double pot = potential(sc, site_id, d, kSaltLatent);
  if (sc.info_blur > 0) {
    SplitMix64 blur_rng(derive_seed(sc.seed, site_id, d.time_since_epoch().count(), kSaltBlur));
    pot *= std::exp(sc.info_blur * blur_rng.normal() - 0.5 * sc.info_blur * sc.info_blur);
  }
  DayState s = day_state(sc, clim, pot);
  SplitMix64 rng(
      derive_seed(sc.seed, site_id, d.time_since_epoch().count(), kSaltMemberBase + member));
  double x = draw_amount(s, rng);
  double cond_mean = s.pop * kGammaShape * s.scale;
  x = cond_mean + sc.dispersion * (x - cond_mean) + sc.wet_bias_mm;
  return x > 0 ? x : 0.0;
}

std::string member_tag_of(const SyntheticScenario& sc, int member) {
  if (sc.ecmwf_layout) {
    if (member == 0) return "HRES";
    if (member == 1) return "CNT";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ENS%02d", member - 1);
    return buf;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ENS%02d", member + 1);
  return buf;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticScenario& scenario) {
  if (scenario.sites_per_region < 1) throw Error("scenario: sites_per_region must be >= 1");
  if (scenario.seasons.empty()) throw Error("scenario: at least one season required");
  if (!(scenario.wet_fraction > 0 && scenario.wet_fraction < 1))
    throw Error("scenario: wet_fraction must be in (0,1)");
  if (scenario.members < 1) throw Error("scenario: members must be >= 1");
  if (scenario.ecmwf_layout && scenario.members < 3)
    throw Error("scenario: ecmwf_layout needs at least 3 members");

  SyntheticData data;

  for (const auto& box : kRegionBoxes) {
    for (int i = 0; i < scenario.sites_per_region; ++i) {
      char id[16];
      std::snprintf(id, sizeof(id), "%s%02d", box.prefix, i + 1);
      SplitMix64 rng(derive_seed(scenario.seed, id, 0, 7));
      double lon = box.lon0 + (box.lon1 - box.lon0) * rng.uniform();
      double lat = box.lat0 + (box.lat1 - box.lat0) * rng.uniform();
      data.sites.push_back(Site::station(id, lon, lat, box.region));
    }
  }

  int first_season = *std::min_element(scenario.seasons.begin(), scenario.seasons.end());
  int last_season = *std::max_element(scenario.seasons.begin(), scenario.seasons.end());

  for (const auto& site : data.sites) {
    SiteClimate clim = site_climate(scenario, site.id);
    ingest::StationSeries series;
    series.site = site;
    for (int year = first_season - scenario.history_years; year <= last_season; ++year) {
      for (Date d = make_date(year, 4, 6); d <= make_date(year, 10, 25);
           d += std::chrono::days{1}) {
        series.days[d] = truth_value(scenario, clim, site.id, d);
      }
    }
    data.stations.emplace(site.id, std::move(series));
  }

  for (const auto& site : data.sites) {
    SiteClimate clim = site_climate(scenario, site.id);
    for (int year : scenario.seasons) {
      for (Date obs_day = make_date(year, 4, 8); obs_day <= make_date(year, 10, 20);
           obs_day += std::chrono::days{1}) {
        UtcTime init = UtcTime{(obs_day - std::chrono::days{1}).time_since_epoch()};  // 00 UTC
        for (int m = 0; m < scenario.members; ++m) {
          std::string tag = member_tag_of(scenario, m);
          data.records.push_back(
              {scenario.source, init, 6, site.longitude, site.latitude, tag, 0.0});
          double accum = 0;
          for (int q = 0; q < scenario.max_window_days; ++q) {
            accum += member_daily(scenario, clim, site.id, obs_day + std::chrono::days{q}, m);
            data.records.push_back({scenario.source, init, 30 + 24 * q, site.longitude,
                                    site.latitude, tag, accum});
          }
        }
      }
    }
  }
  return data;
}

SyntheticScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in);
  SyntheticScenario s;
  s.sites_per_region = j.value("sites_per_region", s.sites_per_region);
  if (j.contains("seasons")) s.seasons = j.at("seasons").get<std::vector<int>>();
  s.history_years = j.value("history_years", s.history_years);
  s.members = j.value("members", s.members);
  s.ecmwf_layout = j.value("ecmwf_layout", s.ecmwf_layout);
  s.wet_fraction = j.value("wet_fraction", s.wet_fraction);
  s.wet_bias_mm = j.value("wet_bias_mm", s.wet_bias_mm);
  s.dispersion = j.value("dispersion", s.dispersion);
  s.info_blur = j.value("info_blur", s.info_blur);
  s.potential_sigma = j.value("potential_sigma", s.potential_sigma);
  s.seed = j.value("seed", s.seed);
  s.max_window_days = j.value("max_window_days", s.max_window_days);
  s.source = j.value("source", s.source);
  return s;
}

void save_scenario(const std::string& path, const SyntheticScenario& s) {
  nlohmann::json j{{"sites_per_region", s.sites_per_region},
                   {"seasons", s.seasons},
                   {"history_years", s.history_years},
                   {"members", s.members},
                   {"ecmwf_layout", s.ecmwf_layout},
                   {"wet_fraction", s.wet_fraction},
                   {"wet_bias_mm", s.wet_bias_mm},
                   {"dispersion", s.dispersion},
                   {"info_blur", s.info_blur},
                   {"potential_sigma", s.potential_sigma},
                   {"seed", s.seed},
                   {"max_window_days", s.max_window_days},
                   {"source", s.source}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

void write_synthetic(const SyntheticData& data, const SyntheticScenario& scenario,
                     const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  ingest::write_sites_csv(out_dir + "/sites.csv", data.sites);
  ingest::write_station_csv(out_dir + "/stations.csv", data.stations);
  ingest::write_forecast_csv(out_dir + "/forecasts.csv", data.records);
  save_scenario(out_dir + "/scenario.json", scenario);
}

}  // namespace pqpf::pipeline
