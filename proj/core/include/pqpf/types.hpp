#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pqpf/dates.hpp"

namespace pqpf {

class PredictiveDistribution;

enum class Region { WestSahel, EastSahel, GuineaCoast, Other };
enum class SiteKind { Station, GridBox };
enum class MemberTag { Hres, Cnt, Ens, Mean };

const char* to_string(Region r);
Region region_from_string(const std::string& s);
const char* to_string(MemberTag t);
// Exact matches map to HRES/CNT/MEAN; anything else is a perturbed member.
MemberTag tag_from_string(const std::string& s);

// Default assignment over the West African study domain; a sites table
// overrides this when supplied.
Region region_from_location(double lon, double lat);

struct BoxExtent {
  double dlon = 0;
  double dlat = 0;
};

struct Site {
  std::string id;
  double longitude = 0;
  double latitude = 0;
  Region region = Region::Other;
  SiteKind kind = SiteKind::Station;
  std::optional<BoxExtent> box_extent;

  static Site station(std::string id, double lon, double lat, Region region);
  static Site grid_box(std::string id, double lon, double lat, Region region, BoxExtent extent);

  void validate() const;
};

struct AccumulationWindow {
  UtcTime valid_start{};  // always 06 UTC, observation-day convention
  int length_days = 1;    // 1..5

  // Window whose last 06-UTC-ending observation day is obs_day.
  static AccumulationWindow ending_on(Date obs_day, int length_days);

  Date first_obs_day() const;  // end day of the first 24 h slice
  Date end_day() const;        // observation day that closes the window
  UtcTime valid_end() const;

  void validate() const;
  bool operator==(const AccumulationWindow&) const = default;
};

struct EnsembleMember {
  MemberTag tag = MemberTag::Ens;
  double value = 0;     // mm
  std::string origin;   // contributing EPS acronym for RMM members, else empty
};

struct EnsembleForecast {
  Site site;
  AccumulationWindow window;
  std::vector<EnsembleMember> members;
  std::string source;  // EPS acronym

  void validate() const;
  std::vector<double> values() const;
  // Unique tagged member of a plain (single-origin) ensemble.
  std::optional<double> tagged_value(MemberTag tag) const;
};

struct Observation {
  enum class Source { Gauge, Satellite };

  Site site;
  AccumulationWindow window;
  double amount = 0;  // mm
  Source source = Source::Gauge;

  void validate() const;
};

// Global station range test bound (1-day accumulation, mm).
inline constexpr double kMaxDailyPrecipMm = 1825.0;

struct ForecastCase {
  std::shared_ptr<const PredictiveDistribution> forecast;
  Observation observation;
  int season = 0;
};

}  // namespace pqpf
