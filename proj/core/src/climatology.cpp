#include "pqpf/climatology.hpp"

#include "pqpf/errors.hpp"

namespace pqpf::climatology {

EpcForecast build_epc(const ingest::StationSeries& archive, const AccumulationWindow& window,
                      const EpcConfig& config) {
  window.validate();
  if (config.history_years < 1) throw Error("EPC needs at least one history year");
  if (config.day_window < 0) throw Error("EPC day window must be nonnegative");

  EpcForecast epc;
  epc.site = archive.site;
  epc.window = window;
  epc.config = config;

  const Date considered = window.first_obs_day();  // calendar anchor of the window
  const int verification_year = year_of(window.end_day());
  const int k = window.length_days;

  // Calendar matching is by canonical day-of-year, so 29 Feb contributes to
  // neighboring-day windows in leap years and simply does not exist otherwise.
  for (const auto& [date, value] : archive.days) {
    int y = year_of(date);
    if (y == verification_year) continue;
    if (y < verification_year - config.history_years || y > verification_year - 1) continue;
    if (calendar_distance(date, considered) > config.day_window) continue;

    double sum = 0;
    bool complete = true;
    for (int j = 0; j < k; ++j) {
      Date d = date + std::chrono::days{j};
      if (year_of(d) == verification_year) {
        complete = false;
        break;
      }
      auto it = archive.days.find(d);
      if (it == archive.days.end()) {
        complete = false;
        break;
      }
      sum += it->second;
    }
    if (complete)
      epc.members.push_back(sum);
    else
      ++epc.dropped_slots;
  }

  if (epc.members.empty())
    throw InsufficientHistoryError("no historical observations around " +
                                   format_date(considered) + " for site " + archive.site.id);
  return epc;
}

std::shared_ptr<EpcEmpirical> epc_as_distribution(const EpcForecast& epc) {
  return std::make_shared<EpcEmpirical>(epc.members);
}

}  // namespace pqpf::climatology
