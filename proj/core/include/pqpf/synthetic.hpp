#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pqpf/ingest.hpp"
#include "pqpf/types.hpp"

namespace pqpf::pipeline {

// Synthetic monsoon scenario: observations follow a site climatology (point
// mass + Gamma amounts driven by a latent daily rain potential); ensembles
// see a blurred potential and can be biased and dispersion-deflated.
struct SyntheticScenario {
  int sites_per_region = 4;
  std::vector<int> seasons = {2013, 2014};
  int history_years = 12;  // archive-only years before the first season
  int members = 8;         // ensemble size, HRES + CNT + perturbed when ecmwf_layout
  bool ecmwf_layout = true;
  double wet_fraction = 0.45;
  double wet_bias_mm = 0;    // added to every member after deflation
  double dispersion = 1.0;   // member spread factor, 1 = calibrated
  double info_blur = 0.0;    // log-scale noise of the ensemble's view, 0 = perfect
  double potential_sigma = 0.6;  // log-scale spread of the daily rain potential
  std::uint64_t seed = 42;
  int max_window_days = 5;   // accumulation leads emitted per run
  std::string source = "SYN";
};

SyntheticScenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const SyntheticScenario& scenario);

struct SyntheticData {
  std::vector<Site> sites;
  std::map<std::string, ingest::StationSeries> stations;  // history + verification years
  std::vector<ingest::RawForecastRecord> records;         // verification seasons only
};

SyntheticData generate_synthetic(const SyntheticScenario& scenario);

// sites.csv, stations.csv, forecasts.csv and scenario.json under out_dir.
void write_synthetic(const SyntheticData& data, const SyntheticScenario& scenario,
                     const std::string& out_dir);

}  // namespace pqpf::pipeline
