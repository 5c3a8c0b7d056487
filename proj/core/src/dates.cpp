#include "pqpf/dates.hpp"

#include <cstdio>

#include "pqpf/errors.hpp"

namespace pqpf {

using namespace std::chrono;

Date make_date(int y, unsigned m, unsigned d) {
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) {
    throw FormatError("invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) +
                      "-" + std::to_string(d));
  }
  return sys_days{ymd};
}

int year_of(Date d) { return int(year_month_day{d}.year()); }
unsigned month_of(Date d) { return unsigned(year_month_day{d}.month()); }
unsigned day_of(Date d) { return unsigned(year_month_day{d}.day()); }

Date parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(iso.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
    throw FormatError("cannot parse date '" + iso + "'");
  }
  return make_date(y, m, d);
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year_of(d), month_of(d), day_of(d));
  return buf;
}

UtcTime parse_time(const std::string& iso) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  int n = std::sscanf(iso.c_str(), "%d-%u-%uT%u:%u:%u", &y, &mo, &d, &h, &mi, &s);
  if (n < 3) throw FormatError("cannot parse timestamp '" + iso + "'");
  if (h > 23 || mi > 59 || s > 60) throw FormatError("invalid time of day in '" + iso + "'");
  return UtcTime{make_date(y, mo, d).time_since_epoch() + hours{h} + minutes{mi} + seconds{s}};
}

std::string format_time(UtcTime t) {
  Date d = floor<days>(t);
  auto tod = t - d;
  int h = int(duration_cast<hours>(tod).count());
  int mi = int(duration_cast<minutes>(tod).count()) % 60;
  int s = int(duration_cast<seconds>(tod).count()) % 60;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02dZ", format_date(d).c_str(), h, mi, s);
  return buf;
}

int hour_of(UtcTime t) {
  return int(duration_cast<hours>(t - floor<days>(t)).count());
}

Date date_of(UtcTime t) { return floor<days>(t); }

int canonical_doy(Date d) {
  // cumulative month lengths of a leap year
  static constexpr int cum[12] = {0, 31, 60, 91, 121, 152, 182, 213, 244, 274, 305, 335};
  return cum[month_of(d) - 1] + int(day_of(d));
}

int calendar_distance(Date a, Date b) {
  int diff = canonical_doy(a) - canonical_doy(b);
  if (diff < 0) diff = -diff;
  return std::min(diff, 366 - diff);
}

Date monsoon_start(int year) { return make_date(year, 5, 1); }
Date monsoon_end(int year) { return make_date(year, 10, 15); }

bool in_monsoon_season(Date d, int year) {
  return d >= monsoon_start(year) && d <= monsoon_end(year);
}

}  // namespace pqpf
