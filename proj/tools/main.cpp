// pqpf: postprocessing and verification of ensemble precipitation forecasts.
//
// Subcommands cover the full pipeline: synth -> ingest/qc -> epc -> fit ->
// predict -> verify -> report, plus rmm construction and the consistency
// histogram.  Exit codes: 0 success, 2 data/format errors, 3 convergence
// failures.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "pqpf/bma.hpp"
#include "pqpf/climatology.hpp"
#include "pqpf/config.hpp"
#include "pqpf/csv.hpp"
#include "pqpf/diagrams.hpp"
#include "pqpf/emos.hpp"
#include "pqpf/errors.hpp"
#include "pqpf/ingest.hpp"
#include "pqpf/pipeline.hpp"
#include "pqpf/synthetic.hpp"
#include "pqpf/verify.hpp"

namespace {

using namespace pqpf;

constexpr int kExitOk = 0;
constexpr int kExitDataError = 2;
constexpr int kExitConvergence = 3;

struct GlobalArgs {
  std::uint64_t seed = 1;
  std::string config_path;
  int jobs = 1;
  bool seed_set = false;
  bool jobs_set = false;
};

pipeline::PipelineConfig effective_config(const GlobalArgs& g) {
  pipeline::PipelineConfig c;
  if (!g.config_path.empty()) c = pipeline::load_config(g.config_path);
  if (g.seed_set) c.seed = g.seed;
  if (g.jobs_set) c.jobs = g.jobs;
  return c;
}

std::map<std::string, ingest::StationSeries> load_stations(const std::string& stations_path,
                                                           const std::string& sites_path) {
  std::map<std::string, Site> sites;
  if (!sites_path.empty()) sites = ingest::read_sites_csv(sites_path);
  return ingest::read_station_csv(stations_path, sites);
}

nlohmann::json qc_to_json(const ingest::QcReport& r) {
  auto test = [](const ingest::QcTest& t) {
    return nlohmann::json{{"pass", t.pass}, {"detail", t.detail}};
  };
  return {{"station", r.station_id}, {"pass", r.pass()},          {"range", test(r.range)},
          {"availability", test(r.availability)},                 {"skewness", test(r.skewness)},
          {"zero_mass", test(r.zero_mass)}};
}

std::vector<int> seasons_of(const std::map<std::string, ingest::StationSeries>& stations) {
  std::set<int> years;
  for (const auto& [id, s] : stations)
    for (const auto& [d, v] : s.days) years.insert(year_of(d));
  return {years.begin(), years.end()};
}

void write_qc_report(const std::string& path,
                     const std::map<std::string, ingest::StationSeries>& stations,
                     const std::vector<int>& seasons) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, series] : stations)
    out.push_back(qc_to_json(ingest::quality_control(series, seasons)));
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path + "'");
  f << out.dump(1) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Postprocessing and verification of ensemble precipitation forecasts"};
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--seed", global.seed, "Master seed for all randomized steps")
      ->each([&](const std::string&) { global.seed_set = true; });
  app.add_option("--config", global.config_path, "Pipeline config (.json or .toml)");
  app.add_option("--jobs", global.jobs, "Worker threads for region-parallel steps")
      ->each([&](const std::string&) { global.jobs_set = true; });

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate a synthetic monsoon data set");
  std::string synth_scenario, synth_out = "synth";
  synth->add_option("--scenario", synth_scenario, "Scenario JSON (defaults when omitted)");
  synth->add_option("--out-dir", synth_out, "Output directory")->required();

  // ---- ingest ----
  auto* ing = app.add_subcommand("ingest", "Read forecasts/observations, QC, emit matched pairs");
  std::string ing_forecasts, ing_stations, ing_sites, ing_grids, ing_qc, ing_pairs;
  int ing_window = 1;
  ing->add_option("--forecasts", ing_forecasts, "Forecast CSV");
  ing->add_option("--stations", ing_stations, "Station CSV");
  ing->add_option("--sites", ing_sites, "Sites CSV (coordinates and regions)");
  ing->add_option("--grids", ing_grids, "Gridded field base path (base.grd.json/.grd.csv)");
  ing->add_option("--qc-report", ing_qc, "Write QC report JSON here");
  ing->add_option("--pairs-out", ing_pairs, "Write matched forecast-observation pairs CSV");
  ing->add_option("--window-days", ing_window, "Accumulation window length (1..5)");

  // ---- qc ----
  auto* qc = app.add_subcommand("qc", "Quality-control station series");
  std::string qc_stations, qc_sites, qc_out;
  qc->add_option("--stations", qc_stations, "Station CSV")->required();
  qc->add_option("--sites", qc_sites, "Sites CSV");
  qc->add_option("--report", qc_out, "QC report JSON path")->required();

  // ---- epc ----
  auto* epc = app.add_subcommand("epc", "Build extended probabilistic climatology forecasts");
  std::string epc_archive, epc_sites, epc_cases, epc_out;
  int epc_years = 30, epc_window = 2, epc_days = 1;
  epc->add_option("--archive", epc_archive, "Historical station CSV")->required();
  epc->add_option("--sites", epc_sites, "Sites CSV");
  epc->add_option("--years", epc_years, "History years");
  epc->add_option("--day-window", epc_window, "+- day window");
  epc->add_option("--cases", epc_cases, "Pairs CSV naming the (site, day) cases");
  epc->add_option("--window-days", epc_days, "Accumulation days when --cases is omitted");
  epc->add_option("--out", epc_out, "Member-list CSV output")->required();

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "Fit postprocessing parameters on training pairs");
  fit->require_subcommand(1);
  auto* fit_emos_cmd = fit->add_subcommand("emos", "Censored-GEV EMOS by CRPS minimization");
  auto* fit_bma_cmd = fit->add_subcommand("bma", "Gamma-mixture BMA by EM");
  std::string fit_train, fit_region = "all", fit_out, fit_weights;
  int fit_window_days = 20;
  for (auto* sub : {fit_emos_cmd, fit_bma_cmd}) {
    sub->add_option("--train", fit_train, "Training pairs CSV")->required();
    sub->add_option("--region", fit_region, "Region filter (WestSahel/EastSahel/GuineaCoast/all)");
    sub->add_option("--window-days", fit_window_days, "Use the most recent N training days");
    sub->add_option("--out", fit_out, "Parameter JSON output")->required();
  }
  std::string fit_groups = "auto";
  fit_bma_cmd->add_option("--groups", fit_groups, "Component grouping (auto)");
  fit_bma_cmd->add_option("--weights-out", fit_weights, "Weight report CSV");

  // ---- predict ----
  auto* predict = app.add_subcommand("predict", "Predict from fitted parameters or roll the pipeline");
  std::string pred_pairs, pred_emos, pred_bma, pred_archive, pred_sites, pred_out;
  bool pred_rolling = false;
  predict->add_option("--pairs", pred_pairs, "Pairs CSV with forecasts to predict for")->required();
  predict->add_option("--emos-params", pred_emos, "EMOS parameter JSON");
  predict->add_option("--bma-params", pred_bma, "BMA parameter JSON");
  predict->add_flag("--rolling", pred_rolling, "Rolling regional train/predict protocol");
  predict->add_option("--archive", pred_archive, "Station CSV archive (EPC + rolling)");
  predict->add_option("--sites", pred_sites, "Sites CSV");
  predict->add_option("--out-dir", pred_out, "Directory for <method>.jsonl predictions")
      ->required();

  // ---- rmm ----
  auto* rmm = app.add_subcommand("rmm", "Build the reduced multi-model ensemble from pairs");
  std::string rmm_inputs, rmm_out;
  rmm->add_option("--inputs", rmm_inputs, "Directory of per-EPS pairs CSV files")->required();
  rmm->add_option("--out", rmm_out, "RMM pairs CSV")->required();

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "Score predictions and emit diagnostics");
  std::string ver_forecasts, ver_obs, ver_sites, ver_methods = "raw,epc,emos,bma";
  std::string ver_report, ver_diagrams, ver_reference = "epc";
  verify_cmd->add_option("--forecasts", ver_forecasts, "Directory of <method>.jsonl predictions")
      ->required();
  verify_cmd->add_option("--obs", ver_obs, "Station CSV with verifying observations");
  verify_cmd->add_option("--sites", ver_sites, "Sites CSV");
  verify_cmd->add_option("--methods", ver_methods, "Comma-separated method filter");
  verify_cmd->add_option("--reference", ver_reference, "Reference method for skill/marks");
  verify_cmd->add_option("--report", ver_report, "Score report JSON")->required();
  verify_cmd->add_option("--diagrams", ver_diagrams, "Directory for diagram CSV/SVG files");

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "Render score tables and skill series");
  std::string rep_scores, rep_out;
  report_cmd->add_option("--scores", rep_scores, "Score report JSON from verify")->required();
  report_cmd->add_option("--out-dir", rep_out, "Output directory")->required();

  // ---- consistency ----
  auto* cons = app.add_subcommand("consistency", "2-D histogram of two matched observation sets");
  std::string cons_x, cons_y, cons_out;
  int cons_bins = 25;
  double cons_max = 50.0;
  cons->add_option("--x", cons_x, "Station CSV (x axis)")->required();
  cons->add_option("--y", cons_y, "Station CSV (y axis)")->required();
  cons->add_option("--bins", cons_bins, "Bins per axis");
  cons->add_option("--max", cons_max, "Upper edge in mm");
  cons->add_option("--out", cons_out, "Histogram CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      pipeline::SyntheticScenario scenario;
      if (!synth_scenario.empty()) scenario = pipeline::load_scenario(synth_scenario);
      if (global.seed_set) scenario.seed = global.seed;
      pipeline::SyntheticData data = pipeline::generate_synthetic(scenario);
      pipeline::write_synthetic(data, scenario, synth_out);
      auto pairs = pipeline::pair_forecasts(data.records, data.stations, 1);
      pipeline::write_pairs_csv(synth_out + "/pairs.csv", pairs);
      std::cout << "synth: " << data.sites.size() << " sites, " << pairs.size()
                << " matched 1-day pairs -> " << synth_out << "\n";
      return kExitOk;
    }

    if (*ing) {
      std::map<std::string, ingest::StationSeries> stations;
      if (!ing_stations.empty()) stations = load_stations(ing_stations, ing_sites);
      if (!ing_grids.empty()) {
        ingest::GriddedField field = ingest::read_gridded(ing_grids);
        std::cout << "ingest: grid " << field.spec.nx << "x" << field.spec.ny << ", "
                  << field.steps.size() << " steps\n";
      }
      if (!ing_qc.empty()) {
        if (stations.empty()) throw Error("--qc-report requires --stations");
        write_qc_report(ing_qc, stations, seasons_of(stations));
      }
      if (!ing_pairs.empty()) {
        if (ing_forecasts.empty() || stations.empty())
          throw Error("--pairs-out requires --forecasts and --stations");
        auto records = ingest::read_forecast_csv(ing_forecasts);
        auto pairs = pipeline::pair_forecasts(records, stations, ing_window);
        pipeline::write_pairs_csv(ing_pairs, pairs);
        std::cout << "ingest: " << pairs.size() << " matched pairs -> " << ing_pairs << "\n";
      }
      return kExitOk;
    }

    if (*qc) {
      auto stations = load_stations(qc_stations, qc_sites);
      write_qc_report(qc_out, stations, seasons_of(stations));
      std::cout << "qc: " << stations.size() << " stations -> " << qc_out << "\n";
      return kExitOk;
    }

    if (*epc) {
      auto archive = load_stations(epc_archive, epc_sites);
      climatology::EpcConfig cfg{epc_years, epc_window};
      std::ofstream out(epc_out);
      if (!out) throw Error("cannot write '" + epc_out + "'");
      out << "site_id,date,window_days,member_mm\n";
      std::size_t built = 0;
      auto emit = [&](const std::string& site_id, Date date, int wdays) {
        auto it = archive.find(site_id);
        if (it == archive.end()) throw Error("no archive series for site " + site_id);
        auto epc_fc =
            climatology::build_epc(it->second, AccumulationWindow::ending_on(date, wdays), cfg);
        for (double m : epc_fc.members)
          out << site_id << ',' << format_date(date) << ',' << wdays << ',' << format_double(m)
              << '\n';
        ++built;
      };
      if (!epc_cases.empty()) {
        for (const auto& c : pipeline::read_pairs_csv(epc_cases))
          emit(c.site.id, c.date, c.window_days);
      } else {
        for (const auto& [id, series] : archive) {
          int last_year = 0;
          for (const auto& [d, v] : series.days) last_year = std::max(last_year, year_of(d));
          for (Date d = monsoon_start(last_year); d <= monsoon_end(last_year);
               d += std::chrono::days{1}) {
            if (series.days.count(d)) emit(id, d, epc_days);
          }
        }
      }
      std::cout << "epc: " << built << " forecasts -> " << epc_out << "\n";
      return kExitOk;
    }

    if (*fit) {
      auto cases = pipeline::read_pairs_csv(fit_train);
      if (fit_region != "all") {
        Region r = region_from_string(fit_region);
        std::erase_if(cases, [&](const pipeline::CaseInput& c) { return c.site.region != r; });
      }
      // most recent N training days
      std::set<Date> dates;
      for (const auto& c : cases) dates.insert(c.date);
      if (dates.empty()) throw Error("fit: no training cases after filtering");
      std::vector<Date> keep(dates.begin(), dates.end());
      if (int(keep.size()) > fit_window_days)
        keep.erase(keep.begin(), keep.end() - fit_window_days);
      std::set<Date> keep_set(keep.begin(), keep.end());
      std::erase_if(cases,
                    [&](const pipeline::CaseInput& c) { return !keep_set.count(c.date); });

      if (*fit_emos_cmd) {
        std::vector<emos::EmosTrainingPair> pairs;
        for (const auto& c : cases)
          pairs.push_back({emos::compute_predictors(c.forecast), c.obs});
        emos::EmosFit result = emos::fit_emos(pairs);
        emos::save_emos_params(fit_out, result.params);
        std::cout << "fit emos: " << pairs.size() << " pairs, train CRPS "
                  << format_double(result.train_crps) << ", "
                  << (result.converged ? "converged" : "NOT converged") << " after "
                  << result.iterations << " iterations -> " << fit_out << "\n";
        return result.converged ? kExitOk : kExitConvergence;
      }

      if (fit_groups != "auto") throw Error("fit bma: only --groups auto is supported");
      std::vector<EnsembleForecast> forecasts;
      std::vector<double> obs;
      for (const auto& c : cases) {
        forecasts.push_back(c.forecast);
        obs.push_back(c.obs);
      }
      bma::BmaFit result = bma::fit_bma_em(forecasts, obs);
      bma::save_bma_params(fit_out, result.params);
      if (!fit_weights.empty()) {
        std::ofstream w(fit_weights);
        if (!w) throw Error("cannot write '" + fit_weights + "'");
        w << "group,weight\n";
        for (std::size_t g = 0; g < result.params.components.size(); ++g)
          w << result.params.components[g].group << ','
            << format_double(result.params.weights[g]) << '\n';
      }
      std::cout << "fit bma: " << forecasts.size() << " pairs, log-likelihood "
                << format_double(result.loglik_trace.back()) << ", "
                << (result.converged ? "converged" : "NOT converged") << " after "
                << result.iterations << " EM iterations -> " << fit_out << "\n";
      return result.converged ? kExitOk : kExitConvergence;
    }

    if (*predict) {
      auto cases = pipeline::read_pairs_csv(pred_pairs);
      std::filesystem::create_directories(pred_out);
      if (pred_rolling) {
        if (pred_archive.empty()) throw Error("predict --rolling requires --archive");
        auto archive = load_stations(pred_archive, pred_sites);
        pipeline::PipelineConfig config = effective_config(global);
        pipeline::RollingResult result =
            pipeline::rolling_train_predict(config, cases, archive);
        std::map<std::string, std::vector<pipeline::PredictionRecord>> by_method;
        for (auto& p : result.predictions) by_method[p.method].push_back(p);
        for (const auto& [method, preds] : by_method)
          pipeline::write_predictions_jsonl(pred_out + "/" + method + ".jsonl", preds);
        for (const auto& s : result.skipped) std::cerr << "skipped " << s << "\n";
        std::cout << "predict: " << result.predictions.size() << " predictions from "
                  << result.fits << " fits -> " << pred_out << "\n";
        int bad = result.emos_nonconverged + result.bma_nonconverged;
        if (bad > 0) {
          std::cerr << bad << " fits did not converge\n";
          return kExitConvergence;
        }
        return kExitOk;
      }

      std::vector<pipeline::PredictionRecord> preds;
      if (!pred_emos.empty()) {
        emos::EmosParams params = emos::load_emos_params(pred_emos);
        for (const auto& c : cases) {
          preds.push_back({"emos", c.site.id, c.site.region, c.date, c.window_days, c.season,
                           c.obs,
                           std::make_shared<emos::CensoredGev>(emos::predict_emos(
                               params, emos::compute_predictors(c.forecast)))});
        }
        pipeline::write_predictions_jsonl(pred_out + "/emos.jsonl", preds);
      }
      if (!pred_bma.empty()) {
        bma::BmaParams params = bma::load_bma_params(pred_bma);
        std::vector<pipeline::PredictionRecord> bpreds;
        for (const auto& c : cases) {
          bpreds.push_back({"bma", c.site.id, c.site.region, c.date, c.window_days, c.season,
                            c.obs,
                            std::make_shared<bma::BmaMixture>(bma::predict_bma(params,
                                                                               c.forecast))});
        }
        pipeline::write_predictions_jsonl(pred_out + "/bma.jsonl", bpreds);
        preds.insert(preds.end(), bpreds.begin(), bpreds.end());
      }
      if (preds.empty()) throw Error("predict: supply --emos-params/--bma-params or --rolling");
      std::cout << "predict: " << preds.size() << " predictions -> " << pred_out << "\n";
      return kExitOk;
    }

    if (*rmm) {
      // group per-EPS pairs by (site, date, window) and combine
      std::map<std::tuple<std::string, Date, int>, std::vector<pipeline::CaseInput>> grouped;
      for (const auto& entry : std::filesystem::directory_iterator(rmm_inputs)) {
        if (entry.path().extension() != ".csv") continue;
        for (auto& c : pipeline::read_pairs_csv(entry.path().string()))
          grouped[{c.site.id, c.date, c.window_days}].push_back(std::move(c));
      }
      std::vector<pipeline::CaseInput> combined;
      for (auto& [key, members] : grouped) {
        std::vector<EnsembleForecast> subs;
        for (const auto& c : members) subs.push_back(c.forecast);
        pipeline::CaseInput c = members.front();
        c.forecast = bma::build_rmm(subs);
        combined.push_back(std::move(c));
      }
      pipeline::write_pairs_csv(rmm_out, combined);
      std::cout << "rmm: " << combined.size() << " combined cases -> " << rmm_out << "\n";
      return kExitOk;
    }

    if (*verify_cmd) {
      std::set<std::string> wanted;
      for (const auto& m : split_csv_line(ver_methods))
        if (!m.empty()) wanted.insert(m);
      std::vector<pipeline::PredictionRecord> preds;
      for (const auto& entry : std::filesystem::directory_iterator(ver_forecasts)) {
        if (entry.path().extension() != ".jsonl") continue;
        auto file_preds = pipeline::read_predictions_jsonl(entry.path().string());
        for (auto& p : file_preds)
          if (wanted.count(p.method)) preds.push_back(std::move(p));
      }
      if (preds.empty()) throw Error("verify: no predictions for the requested methods");

      if (!ver_obs.empty()) {
        // re-attach observations from the station archive
        auto stations = load_stations(ver_obs, ver_sites);
        for (auto& p : preds) {
          auto it = stations.find(p.site_id);
          if (it == stations.end()) throw Error("verify: no observations for site " + p.site_id);
          double obs = 0;
          for (int j = 0; j < p.window_days; ++j) {
            Date d = p.date - std::chrono::days{p.window_days - 1 - j};
            auto day = it->second.days.find(d);
            if (day == it->second.days.end())
              throw Error("verify: missing observation " + format_date(d) + " at " + p.site_id);
            obs += day->second;
          }
          p.obs = obs;
        }
      }

      pipeline::PipelineConfig config = effective_config(global);
      verify::ScoreReport report =
          verify::score_cases(pipeline::to_method_cases(preds), config.seed, ver_reference);
      verify::save_report_json(ver_report, report);
      if (!ver_diagrams.empty()) pipeline::write_diagram_files(report, ver_diagrams);
      std::cout << "verify: " << report.cases.size() << " scored cases -> " << ver_report
                << "\n";
      return kExitOk;
    }

    if (*report_cmd) {
      verify::ScoreReport report = verify::load_report_json(rep_scores);
      pipeline::write_report_files(report, rep_out);
      std::cout << "report: tables and skill series -> " << rep_out << "\n";
      return kExitOk;
    }

    if (*cons) {
      auto a = load_stations(cons_x, "");
      auto b = load_stations(cons_y, "");
      auto xy = pipeline::match_observations(a, b);
      pipeline::write_hist2d_csv(cons_out, pipeline::histogram2d(xy, cons_bins, cons_max));
      std::cout << "consistency: " << xy.size() << " matched pairs -> " << cons_out << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}
