#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pqpf/climatology.hpp"
#include "pqpf/config.hpp"
#include "pqpf/ingest.hpp"
#include "pqpf/types.hpp"
#include "pqpf/verify.hpp"

namespace pqpf::pipeline {

// One matched forecast-observation pair, the unit the pipeline works on.
struct CaseInput {
  Site site;
  Date date{};  // observation day closing the window
  int window_days = 1;
  int season = 0;
  EnsembleForecast forecast;
  double obs = 0;
};

// pairs CSV: one row per ensemble member,
// site_id,region,lon,lat,date,window_days,season,source,origin,member_tag,value_mm,obs_mm
std::vector<CaseInput> read_pairs_csv(const std::string& path);
void write_pairs_csv(const std::string& path, const std::vector<CaseInput>& cases);

// Matches raw forecast records to stations (record cell nearest to the site),
// derives window forecasts per the lead-pair rules and attaches the summed
// station observation.  Days with incomplete observations are dropped.
std::vector<CaseInput> pair_forecasts(const std::vector<ingest::RawForecastRecord>& records,
                                      const std::map<std::string, ingest::StationSeries>& stations,
                                      int window_days);

struct PredictionRecord {
  std::string method;
  std::string site_id;
  Region region = Region::Other;
  Date date{};
  int window_days = 1;
  int season = 0;
  double obs = 0;
  std::shared_ptr<const PredictiveDistribution> dist;
};

// JSON-lines serialization of predictive distributions (ensemble members,
// censored-GEV parameters or realized mixture components).
void write_predictions_jsonl(const std::string& path,
                             const std::vector<PredictionRecord>& predictions);
std::vector<PredictionRecord> read_predictions_jsonl(const std::string& path);

struct RollingResult {
  std::vector<PredictionRecord> predictions;
  std::vector<std::string> skipped;  // "<region> <date>: reason"
  int fits = 0;
  int emos_nonconverged = 0;
  int bma_nonconverged = 0;
};

// The evaluation protocol: for every monsoon-season day, fit EMOS/BMA on the
// most recent `training_days` days whose observation windows close before the
// initialization time, pooled regionally, and emit per-case predictions for
// the requested methods plus EPC and raw baselines.
RollingResult rolling_train_predict(const PipelineConfig& config,
                                    const std::vector<CaseInput>& cases,
                                    const std::map<std::string, ingest::StationSeries>& archive);

std::vector<verify::MethodCase> to_method_cases(const std::vector<PredictionRecord>& predictions);

// Score tables (CSV + aligned text with stability marks) and per-season
// skill-score series (CSV + SVG).
void write_report_files(const verify::ScoreReport& report, const std::string& out_dir);

// uPIT histograms (cut at 3), reliability diagrams and Murphy diagrams per
// method, as CSV + SVG.
void write_diagram_files(const verify::ScoreReport& report, const std::string& out_dir);

// 2-D histogram of matched observation pairs (data-consistency display).
struct Hist2d {
  int bins = 25;
  double vmax = 50;
  std::vector<std::vector<std::size_t>> counts;  // [x bin][y bin]
  std::size_t total = 0;
};

Hist2d histogram2d(const std::vector<std::pair<double, double>>& xy, int bins, double vmax);
void write_hist2d_csv(const std::string& path, const Hist2d& hist);

// Matched (a, b) values of two station archives on common (site, day) keys.
std::vector<std::pair<double, double>> match_observations(
    const std::map<std::string, ingest::StationSeries>& a,
    const std::map<std::string, ingest::StationSeries>& b);

}  // namespace pqpf::pipeline
