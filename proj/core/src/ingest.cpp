#include "pqpf/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pqpf/csv.hpp"
#include "pqpf/distribution.hpp"
#include "pqpf/errors.hpp"

namespace pqpf::ingest {

namespace {
constexpr double kAccumNoiseFloorMm = 0.05;
}

std::vector<RawForecastRecord> read_forecast_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, "source,init_time,lead_hours,lon,lat,member_tag,accum_mm", path);
  std::vector<RawForecastRecord> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    if (r.size() != 7) throw FormatError(path + ": bad field count");
    RawForecastRecord rec;
    rec.source = r[0];
    rec.init_time = parse_time(r[1]);
    rec.lead_hours = int(parse_long(r[2], path));
    rec.grid_lon = parse_double(r[3], path);
    rec.grid_lat = parse_double(r[4], path);
    rec.member_tag = r[5];
    rec.accum_mm = parse_double(r[6], path);
    if (rec.lead_hours <= 0) throw FormatError(path + ": lead_hours must be positive");
    if (!(rec.accum_mm >= 0) || !std::isfinite(rec.accum_mm))
      throw FormatError(path + ": accum_mm must be finite and nonnegative");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_forecast_csv(const std::string& path, const std::vector<RawForecastRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "source,init_time,lead_hours,lon,lat,member_tag,accum_mm\n";
  for (const auto& r : records) {
    out << r.source << ',' << format_time(r.init_time) << ',' << r.lead_hours << ','
        << format_double(r.grid_lon) << ',' << format_double(r.grid_lat) << ',' << r.member_tag
        << ',' << format_double(r.accum_mm) << '\n';
  }
}

double StationSeries::availability(int season_year) const {
  int present = 0;
  for (Date d = monsoon_start(season_year); d <= monsoon_end(season_year);
       d += std::chrono::days{1}) {
    present += days.count(d) != 0;
  }
  return double(present) / double(kMonsoonLengthDays);
}

std::map<std::string, Site> read_sites_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, "site_id,lon,lat,region,kind,dlon,dlat", path);
  std::map<std::string, Site> out;
  for (const auto& r : t.rows) {
    if (r.size() != 7) throw FormatError(path + ": bad field count");
    double lon = parse_double(r[1], path);
    double lat = parse_double(r[2], path);
    Region region = region_from_string(r[3]);
    Site s;
    if (r[4] == "GridBox") {
      s = Site::grid_box(r[0], lon, lat, region,
                         BoxExtent{parse_double(r[5], path), parse_double(r[6], path)});
    } else if (r[4] == "Station") {
      s = Site::station(r[0], lon, lat, region);
    } else {
      throw FormatError(path + ": unknown site kind '" + r[4] + "'");
    }
    out.emplace(s.id, std::move(s));
  }
  return out;
}

void write_sites_csv(const std::string& path, const std::vector<Site>& sites) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "site_id,lon,lat,region,kind,dlon,dlat\n";
  for (const auto& s : sites) {
    out << s.id << ',' << format_double(s.longitude) << ',' << format_double(s.latitude) << ','
        << to_string(s.region) << ','
        << (s.kind == SiteKind::GridBox ? "GridBox" : "Station") << ','
        << (s.box_extent ? format_double(s.box_extent->dlon) : "") << ','
        << (s.box_extent ? format_double(s.box_extent->dlat) : "") << '\n';
  }
}

std::map<std::string, StationSeries> read_station_csv(const std::string& path,
                                                      const std::map<std::string, Site>& sites) {
  CsvTable t = read_csv(path);
  require_header(t, "station_id,date,precip_mm", path);
  std::map<std::string, StationSeries> out;
  for (const auto& r : t.rows) {
    if (r.size() != 3) throw FormatError(path + ": bad field count");
    const std::string& id = r[0];
    Date d = parse_date(r[1]);
    double v = parse_double(r[2], path);
    if (v < 0 || !std::isfinite(v))
      throw FormatError(path + ": negative or non-finite precipitation for " + id);
    auto [it, inserted] = out.try_emplace(id);
    if (inserted) {
      auto s = sites.find(id);
      it->second.site = s != sites.end() ? s->second : Site::station(id, 0.0, 0.0, Region::Other);
    }
    if (!it->second.days.emplace(d, v).second)
      throw FormatError(path + ": duplicate day " + r[1] + " for station " + id);
  }
  return out;
}

void write_station_csv(const std::string& path,
                       const std::map<std::string, StationSeries>& stations) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "station_id,date,precip_mm\n";
  for (const auto& [id, series] : stations)
    for (const auto& [d, v] : series.days)
      out << id << ',' << format_date(d) << ',' << format_double(v) << '\n';
}

void GridSpec::validate() const {
  if (!(dlon > 0) || !(dlat > 0)) throw Error("grid resolution must be positive");
  if (nx <= 0 || ny <= 0) throw Error("grid dimensions must be positive");
  if (step_hours <= 0) throw Error("grid step_hours must be positive");
}

double GriddedField::value(int step, CellIndex c) const {
  auto it = steps.find(step);
  if (it == steps.end()) throw GapError("missing step " + std::to_string(step));
  return it->second[std::size_t(c.iy) * spec.nx + c.ix];
}

GriddedField read_gridded(const std::string& base) {
  std::ifstream jin(base + ".grd.json");
  if (!jin) throw FormatError("cannot open '" + base + ".grd.json'");
  nlohmann::json j = nlohmann::json::parse(jin);
  GriddedField f;
  f.spec.origin_lon = j.at("origin_lon").get<double>();
  f.spec.origin_lat = j.at("origin_lat").get<double>();
  f.spec.dlon = j.at("dlon").get<double>();
  f.spec.dlat = j.at("dlat").get<double>();
  f.spec.nx = j.at("nx").get<int>();
  f.spec.ny = j.at("ny").get<int>();
  f.spec.step_hours = j.at("step_hours").get<int>();
  f.spec.start_time = parse_time(j.at("start_time").get<std::string>());
  f.spec.validate();

  const std::string csv_path = base + ".grd.csv";
  CsvTable t = read_csv(csv_path);
  require_header(t, "step,ix,iy,mm", csv_path);
  std::map<int, int> filled;
  for (const auto& r : t.rows) {
    if (r.size() != 4) throw FormatError(csv_path + ": bad field count");
    int step = int(parse_long(r[0], csv_path));
    int ix = int(parse_long(r[1], csv_path));
    int iy = int(parse_long(r[2], csv_path));
    double v = parse_double(r[3], csv_path);
    if (ix < 0 || ix >= f.spec.nx || iy < 0 || iy >= f.spec.ny)
      throw FormatError(csv_path + ": cell index out of range");
    if (v < 0 || !std::isfinite(v)) throw FormatError(csv_path + ": values must be >= 0");
    auto [it, inserted] = f.steps.try_emplace(step);
    if (inserted) it->second.assign(std::size_t(f.spec.nx) * f.spec.ny, -1.0);
    it->second[std::size_t(iy) * f.spec.nx + ix] = v;
    ++filled[step];
  }
  for (auto& [step, values] : f.steps) {
    if (filled[step] != f.spec.nx * f.spec.ny)
      throw FormatError(csv_path + ": step " + std::to_string(step) + " is incomplete");
  }
  return f;
}

void write_gridded(const std::string& base, const GriddedField& field) {
  nlohmann::json j{{"origin_lon", field.spec.origin_lon}, {"origin_lat", field.spec.origin_lat},
                   {"dlon", field.spec.dlon},             {"dlat", field.spec.dlat},
                   {"nx", field.spec.nx},                 {"ny", field.spec.ny},
                   {"step_hours", field.spec.step_hours},
                   {"start_time", format_time(field.spec.start_time)}};
  std::ofstream jout(base + ".grd.json");
  if (!jout) throw Error("cannot write '" + base + ".grd.json'");
  jout << j.dump(2) << '\n';

  std::ofstream out(base + ".grd.csv");
  if (!out) throw Error("cannot write '" + base + ".grd.csv'");
  out << "step,ix,iy,mm\n";
  for (const auto& [step, values] : field.steps)
    for (int iy = 0; iy < field.spec.ny; ++iy)
      for (int ix = 0; ix < field.spec.nx; ++ix)
        out << step << ',' << ix << ',' << iy << ','
            << format_double(values[std::size_t(iy) * field.spec.nx + ix]) << '\n';
}

int lower_lead_hours(int init_hour) {
  switch (init_hour) {
    case 0: return 6;
    case 6: return 0;
    case 12: return 18;
  }
  throw Error("unsupported initialization hour " + std::to_string(init_hour));
}

std::pair<int, int> lead_pair(UtcTime init, const AccumulationWindow& window) {
  auto diff = std::chrono::duration_cast<std::chrono::hours>(window.valid_start - init);
  int lower = int(diff.count());
  if (lower < 0) throw Error("forecast initialized after the accumulation window start");
  if (lower != lower_lead_hours(hour_of(init)))
    throw Error("init time " + format_time(init) + " does not select window start " +
                format_time(window.valid_start));
  return {lower, lower + 24 * window.length_days};
}

EnsembleForecast derive_window_forecast(const std::vector<RawForecastRecord>& records,
                                        const Site& site, const AccumulationWindow& window) {
  if (records.empty()) throw MissingLeadError("no forecast records supplied");
  const std::string& source = records.front().source;
  const UtcTime init = records.front().init_time;
  for (const auto& r : records) {
    if (r.source != source || r.init_time != init)
      throw Error("derive_window_forecast: records span multiple runs");
  }
  auto [lower, upper] = lead_pair(init, window);

  // per-member accumulation tables, checked for monotony in lead time
  std::map<std::string, std::map<int, double>> accum;
  for (const auto& r : records) {
    auto [it, inserted] = accum[r.member_tag].emplace(r.lead_hours, r.accum_mm);
    if (!inserted && it->second != r.accum_mm)
      throw InconsistentAccumulationError("conflicting accumulations for member " + r.member_tag +
                                          " at lead " + std::to_string(r.lead_hours));
  }

  EnsembleForecast f;
  f.site = site;
  f.window = window;
  f.source = source;
  for (auto& [tag, table] : accum) {
    double prev = 0.0;
    for (auto& [lead, value] : table) {
      if (value < prev - kAccumNoiseFloorMm)
        throw InconsistentAccumulationError("member " + tag +
                                            ": accumulation decreases at lead " +
                                            std::to_string(lead));
      prev = std::max(prev, value);
    }
    double lo = 0.0;
    if (auto it = table.find(lower); it != table.end()) {
      lo = it->second;
    } else if (lower != 0) {
      // a 0-hour accumulation is 0 by definition and may be omitted
      throw MissingLeadError("member " + tag + ": missing lead " + std::to_string(lower) + " h");
    }
    auto hi = table.find(upper);
    if (hi == table.end())
      throw MissingLeadError("member " + tag + ": missing lead " + std::to_string(upper) + " h");
    double v = hi->second - lo;
    if (v < 0) {
      if (v < -kAccumNoiseFloorMm)
        throw InconsistentAccumulationError("member " + tag + ": negative accumulation " +
                                            format_double(v) + " mm");
      v = 0.0;
    }
    f.members.push_back({tag_from_string(tag), v, ""});
  }
  f.validate();
  return f;
}

CellIndex nearest_neighbor(const GridSpec& grid, const Site& site) {
  grid.validate();
  double px = (site.longitude - grid.origin_lon) / grid.dlon;
  double py = (site.latitude - grid.origin_lat) / grid.dlat;
  if (px < -0.5 || px > grid.nx - 0.5 || py < -0.5 || py > grid.ny - 0.5)
    throw OutOfDomainError("site " + site.id + " outside the grid domain");
  // round half down so edge midpoints resolve to the smaller index
  int ix = int(std::ceil(px - 0.5));
  int iy = int(std::ceil(py - 0.5));
  ix = std::clamp(ix, 0, grid.nx - 1);
  iy = std::clamp(iy, 0, grid.ny - 1);
  return {ix, iy};
}

std::vector<CellIndex> cells_in_box(const GridSpec& grid, const Box& box) {
  grid.validate();
  std::vector<CellIndex> cells;
  constexpr double eps = 1e-9;
  for (int iy = 0; iy < grid.ny; ++iy) {
    double lat = grid.lat_of(iy);
    if (lat < box.lat0 - eps || lat >= box.lat0 + box.dlat - eps) continue;
    for (int ix = 0; ix < grid.nx; ++ix) {
      double lon = grid.lon_of(ix);
      if (lon < box.lon0 - eps || lon >= box.lon0 + box.dlon - eps) continue;
      cells.push_back({ix, iy});
    }
  }
  return cells;
}

double aggregate_temporal(const GriddedField& field, const AccumulationWindow& window,
                          CellIndex cell) {
  const GridSpec& g = field.spec;
  auto offset = std::chrono::duration_cast<std::chrono::hours>(window.valid_start - g.start_time);
  if (offset.count() % g.step_hours != 0)
    throw GapError("window start not aligned to field time steps");
  int first = int(offset.count() / g.step_hours);
  int count = 24 * window.length_days / g.step_hours;  // steps between boundary stamps
  if ((24 * window.length_days) % g.step_hours != 0)
    throw GapError("field step does not divide the accumulation window");

  std::string gaps;
  for (int i = 0; i <= count; ++i) {
    if (!field.has_step(first + i)) gaps += (gaps.empty() ? "" : ",") + std::to_string(first + i);
  }
  if (first < 0 || !gaps.empty())
    throw GapError("missing field steps [" + gaps + "] for window starting " +
                   format_time(window.valid_start));

  double sum = 0.5 * field.value(first, cell) + 0.5 * field.value(first + count, cell);
  for (int i = 1; i < count; ++i) sum += field.value(first + i, cell);
  return sum;
}

double aggregate_spatial(const GriddedField& field, const AccumulationWindow& window,
                         const Box& box) {
  auto cells = cells_in_box(field.spec, box);
  if (cells.empty()) throw EmptyBoxError("box contains no grid cells");
  double sum = 0;
  for (const auto& c : cells) sum += aggregate_temporal(field, window, c);
  return sum / double(cells.size());
}

QcReport quality_control(const StationSeries& series, const std::vector<int>& seasons) {
  QcReport r;
  r.station_id = series.site.id;

  double worst = 0;
  for (const auto& [d, v] : series.days) worst = std::max(worst, v);
  bool any_negative = false;  // readers reject negatives, but re-check here
  for (const auto& [d, v] : series.days) any_negative |= v < 0;
  r.range.pass = !any_negative && worst <= kMaxDailyPrecipMm;
  r.range.detail = "max " + format_double(worst) + " mm";

  double worst_avail = 1.0;
  int worst_season = seasons.empty() ? 0 : seasons.front();
  for (int season : seasons) {
    double a = series.availability(season);
    if (a < worst_avail) {
      worst_avail = a;
      worst_season = season;
    }
  }
  r.availability.pass = worst_avail >= kMinSeasonAvailability;
  r.availability.detail =
      "min " + format_double(worst_avail) + " in season " + std::to_string(worst_season);

  std::vector<double> values;
  values.reserve(series.days.size());
  for (const auto& [d, v] : series.days) values.push_back(v);
  if (values.empty()) {
    r.skewness.pass = false;
    r.skewness.detail = "no data";
    r.zero_mass.pass = false;
    r.zero_mass.detail = "no data";
    return r;
  }
  std::sort(values.begin(), values.end());
  double mean = 0;
  for (double v : values) mean += v;
  mean /= double(values.size());
  std::size_t n = values.size();
  double median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  r.skewness.pass = median < mean;
  r.skewness.detail = "median " + format_double(median) + ", mean " + format_double(mean);

  std::size_t dry = 0;
  for (double v : values) dry += v < kPopThresholdMm;
  r.zero_mass.pass = dry > 0;
  r.zero_mass.detail = std::to_string(dry) + " dry days";
  return r;
}

}  // namespace pqpf::ingest
