#pragma once

#include <map>
#include <string>
#include <vector>

#include "pqpf/types.hpp"

namespace pqpf::ingest {

// One accumulated-precipitation value of one member run, from forecast CSV
// (header: source,init_time,lead_hours,lon,lat,member_tag,accum_mm).
struct RawForecastRecord {
  std::string source;
  UtcTime init_time{};
  int lead_hours = 0;
  double grid_lon = 0;  // cell center
  double grid_lat = 0;
  std::string member_tag;
  double accum_mm = 0;
};

std::vector<RawForecastRecord> read_forecast_csv(const std::string& path);
void write_forecast_csv(const std::string& path, const std::vector<RawForecastRecord>& records);

// Daily 06-06 UTC station totals keyed by the observation day that closes
// the 24 h window.
struct StationSeries {
  Site site;
  std::map<Date, double> days;

  // Fraction of monsoon-season days (1 May - 15 Oct) with an observation.
  double availability(int season_year) const;
};

std::map<std::string, Site> read_sites_csv(const std::string& path);
void write_sites_csv(const std::string& path, const std::vector<Site>& sites);

// station CSV (header: station_id,date,precip_mm); coordinates and regions
// come from the optional sites table.
std::map<std::string, StationSeries> read_station_csv(const std::string& path,
                                                      const std::map<std::string, Site>& sites = {});
void write_station_csv(const std::string& path,
                       const std::map<std::string, StationSeries>& stations);

struct GridSpec {
  double origin_lon = 0;  // center of cell (0,0)
  double origin_lat = 0;
  double dlon = 0.25;
  double dlat = 0.25;
  int nx = 0;
  int ny = 0;
  int step_hours = 3;
  UtcTime start_time{};

  double lon_of(int ix) const { return origin_lon + ix * dlon; }
  double lat_of(int iy) const { return origin_lat + iy * dlat; }
  void validate() const;
};

struct CellIndex {
  int ix = 0;
  int iy = 0;
  bool operator==(const CellIndex&) const = default;
};

// Gridded observation archive; a time step is present only if every cell of
// that step appears in the .grd.csv file.
struct GriddedField {
  GridSpec spec;
  std::map<int, std::vector<double>> steps;  // step index -> nx*ny values

  double value(int step, CellIndex c) const;
  bool has_step(int step) const { return steps.count(step) != 0; }
};

// `base` names the pair base.grd.json (spec sidecar) + base.grd.csv (values,
// header: step,ix,iy,mm).
GriddedField read_gridded(const std::string& base);
void write_gridded(const std::string& base, const GriddedField& field);

// Lower lead hour of the accumulation difference for a run initialized at
// init_hour UTC (00 -> 6 h, 06 -> 0 h, 12 -> 18 h).
int lower_lead_hours(int init_hour);

// The (lower, upper) lead pair selecting `window` from a run started at
// `init`; upper extends by 24 h per accumulation day.
std::pair<int, int> lead_pair(UtcTime init, const AccumulationWindow& window);

// Member values as accum(upper) - accum(lower); records must all belong to
// one (source, init, cell).  Differences in [-0.05, 0) mm are floored to 0,
// larger negative differences raise InconsistentAccumulationError.
EnsembleForecast derive_window_forecast(const std::vector<RawForecastRecord>& records,
                                        const Site& site, const AccumulationWindow& window);

// Cell whose center is nearest in Euclidean degree distance; ties go to the
// smaller (ix, iy).  OutOfDomainError if the site lies outside the grid.
CellIndex nearest_neighbor(const GridSpec& grid, const Site& site);

// Longitude-latitude box, south-west corner + extent, aligned to the grid.
struct Box {
  double lon0 = 0;
  double lat0 = 0;
  double dlon = 1;
  double dlat = 1;
};

std::vector<CellIndex> cells_in_box(const GridSpec& grid, const Box& box);

// Sum over the 06-06 UTC window with the first and last step weighted 0.5.
// Missing steps raise GapError with a gap inventory.
double aggregate_temporal(const GriddedField& field, const AccumulationWindow& window,
                          CellIndex cell);

// Areal mean of the temporally aggregated cells inside the box.
double aggregate_spatial(const GriddedField& field, const AccumulationWindow& window,
                         const Box& box);

struct QcTest {
  bool pass = true;
  std::string detail;
};

struct QcReport {
  std::string station_id;
  QcTest range;         // all values in [0, 1825] mm
  QcTest availability;  // >= 80% in every monsoon season
  QcTest skewness;      // median strictly below mean
  QcTest zero_mass;     // at least one dry day
  bool pass() const {
    return range.pass && availability.pass && skewness.pass && zero_mass.pass;
  }
};

inline constexpr double kMinSeasonAvailability = 0.8;

QcReport quality_control(const StationSeries& series, const std::vector<int>& seasons);

}  // namespace pqpf::ingest
