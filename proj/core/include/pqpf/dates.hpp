#pragma once

#include <chrono>
#include <string>

namespace pqpf {

using Date = std::chrono::sys_days;
using UtcTime = std::chrono::sys_seconds;

Date make_date(int year, unsigned month, unsigned day);
int year_of(Date d);
unsigned month_of(Date d);
unsigned day_of(Date d);

// "YYYY-MM-DD"
Date parse_date(const std::string& iso);
std::string format_date(Date d);

// "YYYY-MM-DDTHH:MM:SSZ" (seconds optional, trailing Z optional)
UtcTime parse_time(const std::string& iso);
std::string format_time(UtcTime t);

int hour_of(UtcTime t);
Date date_of(UtcTime t);

// Day-of-year index on a fixed 366-day calendar: 1 Mar is always 61, so the
// same month/day maps to the same index in leap and non-leap years and 29 Feb
// occupies index 60 only when it exists.
int canonical_doy(Date d);

// Cyclic distance between the canonical day-of-year indices of two dates.
int calendar_distance(Date a, Date b);

// Monsoon season: 1 May - 15 Oct inclusive (168 days).
Date monsoon_start(int year);
Date monsoon_end(int year);
bool in_monsoon_season(Date d, int year);
inline constexpr int kMonsoonLengthDays = 168;

}  // namespace pqpf
