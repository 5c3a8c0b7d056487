#include "pqpf/types.hpp"

#include <cmath>
#include <map>

#include "pqpf/errors.hpp"

namespace pqpf {

const char* to_string(Region r) {
  switch (r) {
    case Region::WestSahel: return "WestSahel";
    case Region::EastSahel: return "EastSahel";
    case Region::GuineaCoast: return "GuineaCoast";
    case Region::Other: return "Other";
  }
  return "Other";
}

Region region_from_string(const std::string& s) {
  if (s == "WestSahel") return Region::WestSahel;
  if (s == "EastSahel") return Region::EastSahel;
  if (s == "GuineaCoast") return Region::GuineaCoast;
  if (s == "Other") return Region::Other;
  throw FormatError("unknown region '" + s + "'");
}

const char* to_string(MemberTag t) {
  switch (t) {
    case MemberTag::Hres: return "HRES";
    case MemberTag::Cnt: return "CNT";
    case MemberTag::Ens: return "ENS";
    case MemberTag::Mean: return "MEAN";
  }
  return "ENS";
}

MemberTag tag_from_string(const std::string& s) {
  if (s == "HRES") return MemberTag::Hres;
  if (s == "CNT") return MemberTag::Cnt;
  if (s == "MEAN") return MemberTag::Mean;
  return MemberTag::Ens;
}

Region region_from_location(double lon, double lat) {
  if (lon < -18.0 || lon > 45.0 || lat < 4.0 || lat > 20.0) return Region::Other;
  if (lat < 9.5) return Region::GuineaCoast;
  return lon < 10.0 ? Region::WestSahel : Region::EastSahel;
}

Site Site::station(std::string id, double lon, double lat, Region region) {
  Site s;
  s.id = std::move(id);
  s.longitude = lon;
  s.latitude = lat;
  s.region = region;
  s.kind = SiteKind::Station;
  s.validate();
  return s;
}

Site Site::grid_box(std::string id, double lon, double lat, Region region, BoxExtent extent) {
  Site s;
  s.id = std::move(id);
  s.longitude = lon;
  s.latitude = lat;
  s.region = region;
  s.kind = SiteKind::GridBox;
  s.box_extent = extent;
  s.validate();
  return s;
}

void Site::validate() const {
  if (id.empty()) throw Error("site id must not be empty");
  if (!(longitude >= -180.0 && longitude <= 180.0))
    throw Error("site " + id + ": longitude out of range");
  if (!(latitude >= -90.0 && latitude <= 90.0))
    throw Error("site " + id + ": latitude out of range");
  if (kind == SiteKind::GridBox && !box_extent)
    throw Error("site " + id + ": grid box requires box_extent");
  if (kind == SiteKind::Station && box_extent)
    throw Error("site " + id + ": station forbids box_extent");
}

AccumulationWindow AccumulationWindow::ending_on(Date obs_day, int length_days) {
  AccumulationWindow w;
  w.length_days = length_days;
  w.valid_start = UtcTime{(obs_day - std::chrono::days{length_days}).time_since_epoch() +
                          std::chrono::hours{6}};
  w.validate();
  return w;
}

Date AccumulationWindow::first_obs_day() const {
  return date_of(valid_start) + std::chrono::days{1};
}

Date AccumulationWindow::end_day() const {
  return date_of(valid_start) + std::chrono::days{length_days};
}

UtcTime AccumulationWindow::valid_end() const {
  return valid_start + std::chrono::hours{24 * length_days};
}

void AccumulationWindow::validate() const {
  if (length_days < 1 || length_days > 5)
    throw Error("accumulation window length must be 1..5 days");
  if (hour_of(valid_start) != 6)
    throw Error("accumulation window must start at 06 UTC");
}

void EnsembleForecast::validate() const {
  site.validate();
  window.validate();
  if (members.empty()) throw Error("ensemble must have at least one member");
  std::map<std::string, int> hres_count, cnt_count;
  for (const auto& m : members) {
    if (!std::isfinite(m.value) || m.value < 0)
      throw Error("ensemble member values must be finite and nonnegative");
    if (m.tag == MemberTag::Hres && ++hres_count[m.origin] > 1)
      throw Error("at most one HRES member per contributor");
    if (m.tag == MemberTag::Cnt && ++cnt_count[m.origin] > 1)
      throw Error("at most one CNT member per contributor");
  }
}

std::vector<double> EnsembleForecast::values() const {
  std::vector<double> v;
  v.reserve(members.size());
  for (const auto& m : members) v.push_back(m.value);
  return v;
}

std::optional<double> EnsembleForecast::tagged_value(MemberTag tag) const {
  for (const auto& m : members)
    if (m.tag == tag) return m.value;
  return std::nullopt;
}

void Observation::validate() const {
  site.validate();
  window.validate();
  if (!std::isfinite(amount) || amount < 0)
    throw Error("observation amount must be finite and nonnegative");
  if (amount > kMaxDailyPrecipMm * window.length_days)
    throw Error("observation amount exceeds the global range test bound");
}

}  // namespace pqpf
