#pragma once

#include <memory>

#include "pqpf/distribution.hpp"
#include "pqpf/ingest.hpp"
#include "pqpf/types.hpp"

namespace pqpf::climatology {

struct EpcConfig {
  int history_years = 30;
  int day_window = 2;  // +- days around the considered calendar day
};

// Extended probabilistic climatology: every available same-calendar-day
// (+- day_window) observation from the prior history, never from the
// verification year itself.
struct EpcForecast {
  Site site;
  AccumulationWindow window;
  std::vector<double> members;
  EpcConfig config;
  int dropped_slots = 0;  // matched calendar slots with incomplete history
};

EpcForecast build_epc(const ingest::StationSeries& archive, const AccumulationWindow& window,
                      const EpcConfig& config = {});

std::shared_ptr<EpcEmpirical> epc_as_distribution(const EpcForecast& epc);

}  // namespace pqpf::climatology
