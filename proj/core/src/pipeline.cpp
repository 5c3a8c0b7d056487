#include "pqpf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "pqpf/bma.hpp"
#include "pqpf/csv.hpp"
#include "pqpf/diagrams.hpp"
#include "pqpf/emos.hpp"
#include "pqpf/errors.hpp"
#include "pqpf/gev.hpp"

namespace pqpf::pipeline {

namespace {

constexpr const char* kPairsHeader =
    "site_id,region,lon,lat,date,window_days,season,source,origin,member_tag,value_mm,obs_mm";

bool has_method(const PipelineConfig& c, const std::string& m) {
  return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

}  // namespace

std::vector<CaseInput> read_pairs_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, kPairsHeader, path);
  std::map<std::tuple<std::string, std::string, int>, CaseInput> cases;  // (site, date, window)
  for (const auto& r : t.rows) {
    if (r.size() != 12) throw FormatError(path + ": bad field count");
    std::tuple<std::string, std::string, int> key{r[0], r[4], int(parse_long(r[5], path))};
    auto [it, inserted] = cases.try_emplace(key);
    CaseInput& c = it->second;
    if (inserted) {
      c.site = Site::station(r[0], parse_double(r[2], path), parse_double(r[3], path),
                             region_from_string(r[1]));
      c.date = parse_date(r[4]);
      c.window_days = int(parse_long(r[5], path));
      c.season = int(parse_long(r[6], path));
      c.obs = parse_double(r[11], path);
      c.forecast.site = c.site;
      c.forecast.window = AccumulationWindow::ending_on(c.date, c.window_days);
      c.forecast.source = r[7];
    }
    c.forecast.members.push_back({tag_from_string(r[9]), parse_double(r[10], path), r[8]});
  }
  std::vector<CaseInput> out;
  out.reserve(cases.size());
  for (auto& [key, c] : cases) {
    c.forecast.validate();
    out.push_back(std::move(c));
  }
  return out;
}

void write_pairs_csv(const std::string& path, const std::vector<CaseInput>& cases) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << kPairsHeader << '\n';
  for (const auto& c : cases) {
    for (const auto& m : c.forecast.members) {
      out << c.site.id << ',' << to_string(c.site.region) << ',' << format_double(c.site.longitude)
          << ',' << format_double(c.site.latitude) << ',' << format_date(c.date) << ','
          << c.window_days << ',' << c.season << ',' << c.forecast.source << ',' << m.origin << ','
          << to_string(m.tag) << ',' << format_double(m.value) << ',' << format_double(c.obs)
          << '\n';
    }
  }
}

std::vector<CaseInput> pair_forecasts(const std::vector<ingest::RawForecastRecord>& records,
                                      const std::map<std::string, ingest::StationSeries>& stations,
                                      int window_days) {
  // distinct record cells
  std::vector<std::pair<double, double>> cells;
  for (const auto& r : records) {
    std::pair<double, double> cell{r.grid_lon, r.grid_lat};
    if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
  }
  if (cells.empty()) return {};

  std::vector<CaseInput> out;
  for (const auto& [id, series] : stations) {
    // nearest record cell, ties toward the smaller (lon, lat)
    std::pair<double, double> best = cells.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& cell : cells) {
      double dx = cell.first - series.site.longitude;
      double dy = cell.second - series.site.latitude;
      double d = dx * dx + dy * dy;
      if (d < best_d || (d == best_d && cell < best)) {
        best_d = d;
        best = cell;
      }
    }

    // group that cell's records by run
    std::map<std::pair<std::string, UtcTime>, std::vector<ingest::RawForecastRecord>> runs;
    for (const auto& r : records) {
      if (r.grid_lon != best.first || r.grid_lat != best.second) continue;
      runs[{r.source, r.init_time}].push_back(r);
    }

    for (const auto& [run, run_records] : runs) {
      const UtcTime init = run.second;
      AccumulationWindow window;
      window.length_days = window_days;
      window.valid_start = init + std::chrono::hours{ingest::lower_lead_hours(hour_of(init))};
      if (hour_of(window.valid_start) != 6) continue;

      double obs = 0;
      bool complete = true;
      for (int j = 0; j < window_days; ++j) {
        auto it = series.days.find(window.first_obs_day() + std::chrono::days{j});
        if (it == series.days.end()) {
          complete = false;
          break;
        }
        obs += it->second;
      }
      if (!complete) continue;

      CaseInput c;
      c.site = series.site;
      c.date = window.end_day();
      c.window_days = window_days;
      c.season = year_of(c.date);
      c.forecast = ingest::derive_window_forecast(run_records, series.site, window);
      c.obs = obs;
      out.push_back(std::move(c));
    }
  }
  std::sort(out.begin(), out.end(), [](const CaseInput& a, const CaseInput& b) {
    return std::tie(a.date, a.site.id) < std::tie(b.date, b.site.id);
  });
  return out;
}

// ---- prediction serialization ----------------------------------------------

namespace {

nlohmann::json dist_to_json(const PredictiveDistribution& dist) {
  if (const auto* e = dynamic_cast<const EmpiricalEnsemble*>(&dist)) {
    return {{"type", "ensemble"}, {"members", e->members()}};
  }
  if (const auto* g = dynamic_cast<const emos::CensoredGev*>(&dist)) {
    return {{"type", "cgev"}, {"mu", g->mu()}, {"sigma", g->sigma()}, {"xi", g->xi()}};
  }
  if (const auto* m = dynamic_cast<const bma::BmaMixture*>(&dist)) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : m->components())
      comps.push_back({c.weight, c.p0, c.shape, c.scale});
    return {{"type", "mixture"}, {"components", comps}};
  }
  throw Error("cannot serialize this predictive distribution");
}

std::shared_ptr<const PredictiveDistribution> dist_from_json(const nlohmann::json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "ensemble") {
    return std::make_shared<EmpiricalEnsemble>(j.at("members").get<std::vector<double>>());
  }
  if (type == "cgev") {
    return std::make_shared<emos::CensoredGev>(j.at("mu").get<double>(),
                                               j.at("sigma").get<double>(),
                                               j.at("xi").get<double>());
  }
  if (type == "mixture") {
    std::vector<bma::MixtureComponent> comps;
    for (const auto& c : j.at("components"))
      comps.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>(),
                       c.at(3).get<double>()});
    return std::make_shared<bma::BmaMixture>(std::move(comps));
  }
  throw FormatError("unknown distribution type '" + type + "'");
}

}  // namespace

void write_predictions_jsonl(const std::string& path,
                             const std::vector<PredictionRecord>& predictions) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& p : predictions) {
    nlohmann::json j{{"method", p.method},           {"site", p.site_id},
                     {"region", to_string(p.region)}, {"date", format_date(p.date)},
                     {"window_days", p.window_days},  {"season", p.season},
                     {"obs", p.obs},                  {"dist", dist_to_json(*p.dist)}};
    out << j.dump() << '\n';
  }
}

std::vector<PredictionRecord> read_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<PredictionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    PredictionRecord p;
    p.method = j.at("method").get<std::string>();
    p.site_id = j.at("site").get<std::string>();
    p.region = region_from_string(j.at("region").get<std::string>());
    p.date = parse_date(j.at("date").get<std::string>());
    p.window_days = j.at("window_days").get<int>();
    p.season = j.at("season").get<int>();
    p.obs = j.at("obs").get<double>();
    p.dist = dist_from_json(j.at("dist"));
    out.push_back(std::move(p));
  }
  return out;
}

// ---- rolling training and prediction ---------------------------------------

namespace {

struct RegionOutput {
  std::vector<PredictionRecord> predictions;
  std::vector<std::string> skipped;
  int fits = 0;
  int emos_nonconverged = 0;
  int bma_nonconverged = 0;
};

void process_region(const PipelineConfig& config, Region region,
                    const std::vector<const CaseInput*>& cases,
                    const std::map<std::string, ingest::StationSeries>& archive,
                    RegionOutput& out) {
  std::map<Date, std::vector<const CaseInput*>> by_date;
  for (const CaseInput* c : cases) by_date[c->date].push_back(c);

  const int lower_lead = ingest::lower_lead_hours(config.init_hour);
  bool have_emos_warm = false;
  emos::EmosParams emos_warm;

  for (const auto& [date, day_cases] : by_date) {
    if (!in_monsoon_season(date, year_of(date))) continue;  // verify monsoon days only

    const AccumulationWindow window =
        AccumulationWindow::ending_on(date, config.accumulation_days);
    const UtcTime init = window.valid_start - std::chrono::hours{lower_lead};

    // most recent training days whose windows close before the init time
    std::vector<Date> train_dates;
    for (auto it = by_date.lower_bound(date); it != by_date.begin();) {
      --it;
      UtcTime window_end = UtcTime{it->first.time_since_epoch()} + std::chrono::hours{6};
      if (window_end > init) continue;
      train_dates.push_back(it->first);
      if (int(train_dates.size()) == config.training_days) break;
    }
    if (int(train_dates.size()) < config.training_days) {
      out.skipped.push_back(std::string(to_string(region)) + " " + format_date(date) +
                            ": only " + std::to_string(train_dates.size()) +
                            " training days available");
      continue;
    }

    std::vector<const CaseInput*> train;
    for (Date d : train_dates)
      for (const CaseInput* c : by_date.at(d)) train.push_back(c);

    // leakage guard: no training window may overlap the initialization time
    for (const CaseInput* c : train) {
      UtcTime end = UtcTime{c->date.time_since_epoch()} + std::chrono::hours{6};
      if (end > init)
        throw Error("training leakage: window ending " + format_date(c->date) +
                    " overlaps init " + format_time(init));
    }

    bool want_emos = has_method(config, "emos");
    bool want_bma = has_method(config, "bma");

    std::optional<emos::EmosParams> emos_params;
    if (want_emos) {
      std::vector<emos::EmosTrainingPair> pairs;
      pairs.reserve(train.size());
      for (const CaseInput* c : train)
        pairs.push_back({emos::compute_predictors(c->forecast), c->obs});
      emos::EmosFit fit =
          emos::fit_emos(pairs, have_emos_warm ? &emos_warm : nullptr);
      ++out.fits;
      out.emos_nonconverged += !fit.converged;
      emos_params = fit.params;
      emos_warm = fit.params;
      have_emos_warm = true;
    }

    std::optional<bma::BmaParams> bma_params;
    if (want_bma) {
      std::vector<EnsembleForecast> forecasts;
      std::vector<double> obs;
      for (const CaseInput* c : train) {
        forecasts.push_back(c->forecast);
        obs.push_back(c->obs);
      }
      bma::BmaFit fit = bma::fit_bma_em(forecasts, obs);
      ++out.fits;
      out.bma_nonconverged += !fit.converged;
      bma_params = fit.params;
    }

    for (const CaseInput* c : day_cases) {
      auto emit = [&](const std::string& method,
                      std::shared_ptr<const PredictiveDistribution> dist) {
        out.predictions.push_back({method, c->site.id, c->site.region, c->date, c->window_days,
                                   c->season, c->obs, std::move(dist)});
      };
      if (has_method(config, "raw"))
        emit("raw", std::make_shared<EmpiricalEnsemble>(c->forecast.values()));
      if (has_method(config, "epc")) {
        auto it = archive.find(c->site.id);
        if (it == archive.end())
          throw Error("no archive series for site " + c->site.id);
        emit("epc", climatology::epc_as_distribution(
                        climatology::build_epc(it->second, c->forecast.window, config.epc)));
      }
      if (emos_params) {
        emit("emos", std::make_shared<emos::CensoredGev>(
                         emos::predict_emos(*emos_params, emos::compute_predictors(c->forecast))));
      }
      if (bma_params)
        emit("bma", std::make_shared<bma::BmaMixture>(bma::predict_bma(*bma_params, c->forecast)));
    }
  }
}

}  // namespace

RollingResult rolling_train_predict(const PipelineConfig& config,
                                    const std::vector<CaseInput>& cases,
                                    const std::map<std::string, ingest::StationSeries>& archive) {
  config.validate();
  std::map<Region, std::vector<const CaseInput*>> by_region;
  for (const auto& c : cases) {
    if (c.window_days != config.accumulation_days) continue;
    by_region[c.site.region].push_back(&c);
  }

  std::vector<Region> regions;
  for (const auto& [r, v] : by_region) regions.push_back(r);
  std::vector<RegionOutput> outputs(regions.size());

  auto worker = [&](std::size_t i) {
    process_region(config, regions[i], by_region.at(regions[i]), archive, outputs[i]);
  };

  if (config.jobs > 1 && regions.size() > 1) {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < regions.size(); ++i) threads.emplace_back(worker, i);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t i = 0; i < regions.size(); ++i) worker(i);
  }

  RollingResult result;
  for (auto& o : outputs) {
    result.predictions.insert(result.predictions.end(),
                              std::make_move_iterator(o.predictions.begin()),
                              std::make_move_iterator(o.predictions.end()));
    result.skipped.insert(result.skipped.end(), o.skipped.begin(), o.skipped.end());
    result.fits += o.fits;
    result.emos_nonconverged += o.emos_nonconverged;
    result.bma_nonconverged += o.bma_nonconverged;
  }
  std::sort(result.predictions.begin(), result.predictions.end(),
            [](const PredictionRecord& a, const PredictionRecord& b) {
              return std::tie(a.date, a.site_id, a.method) <
                     std::tie(b.date, b.site_id, b.method);
            });
  return result;
}

std::vector<verify::MethodCase> to_method_cases(
    const std::vector<PredictionRecord>& predictions) {
  std::vector<verify::MethodCase> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    out.push_back(
        {p.method, p.site_id, p.region, p.date, p.window_days, p.season, p.dist, p.obs});
  }
  return out;
}

// ---- reports ----------------------------------------------------------------

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string score_cell(double mean, const char* mark) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3f%s", mean, std::string(mark) == "0" ? "" : mark);
  return buf;
}

}  // namespace

void write_report_files(const verify::ScoreReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::set<std::string> methods;
  std::set<Region> regions;
  for (const auto& a : report.aggregates) {
    methods.insert(a.method);
    regions.insert(a.region);
  }
  // keep the reference first for readability
  std::vector<std::string> method_order;
  if (methods.count("raw")) method_order.push_back("raw");
  if (methods.count(report.reference_method)) method_order.push_back(report.reference_method);
  for (const auto& m : methods)
    if (std::find(method_order.begin(), method_order.end(), m) == method_order.end())
      method_order.push_back(m);

  auto skill_of = [&](Region r, const std::string& m, const std::string& score)
      -> const verify::MethodSkill* {
    for (const auto& k : report.skills)
      if (k.region == r && k.method == m && k.score == score) return &k;
    return nullptr;
  };

  {
    std::ofstream csv(out_dir + "/scores.csv");
    if (!csv) throw Error("cannot write scores.csv");
    csv << "region,method,score,mean,mark,skill,p_value,better,worse,seasons,n\n";
    for (Region r : regions) {
      for (const auto& m : method_order) {
        for (const char* score : {"bs", "crps", "mae"}) {
          const auto* k = skill_of(r, m, score);
          if (!k) continue;
          std::size_t n = 0;
          for (const auto& a : report.aggregates)
            if (a.region == r && a.method == m) n += a.n;
          csv << to_string(r) << ',' << m << ',' << score << ',' << format_double(k->mean) << ','
              << to_string(k->result.mark) << ',' << format_double(k->result.skill) << ','
              << format_double(k->result.p_value) << ',' << k->result.better << ','
              << k->result.worse << ',' << k->result.seasons << ',' << n << '\n';
        }
      }
    }
  }

  {
    std::ofstream txt(out_dir + "/scores.txt");
    if (!txt) throw Error("cannot write scores.txt");
    txt << "Mean scores vs " << report.reference_method
        << " (marks: ++/+ better, --/- worse in all/all-but-one seasons)\n\n";
    txt << pad("method", 8);
    for (const char* score : {"BS", "CRPS", "MAE"})
      for (Region r : regions) txt << pad(std::string(score) + " " + to_string(r), 18);
    txt << '\n';
    for (const auto& m : method_order) {
      txt << pad(m, 8);
      for (const char* score : {"bs", "crps", "mae"}) {
        for (Region r : regions) {
          const auto* k = skill_of(r, m, score);
          txt << pad(k ? score_cell(k->mean, to_string(k->result.mark)) : "-", 18);
        }
      }
      txt << '\n';
    }
  }

  // per-season skill series (reference-relative), one file per region/score
  for (Region r : regions) {
    for (const char* score : {"bs", "crps"}) {
      auto seasonal_mean = [&](const std::string& method, int season) -> double {
        for (const auto& a : report.aggregates)
          if (a.region == r && a.method == method && a.season == season)
            return std::string(score) == "bs" ? a.mean_bs : a.mean_crps;
        return std::nan("");
      };
      std::set<int> seasons;
      for (const auto& a : report.aggregates)
        if (a.region == r) seasons.insert(a.season);

      std::vector<verify::SkillSeries> series;
      for (const auto& m : method_order) {
        if (m == report.reference_method) continue;
        verify::SkillSeries s;
        s.method = m;
        for (int season : seasons) {
          double ref = seasonal_mean(report.reference_method, season);
          double own = seasonal_mean(m, season);
          if (std::isnan(ref) || std::isnan(own) || ref <= 0) continue;
          s.seasons.push_back(season);
          s.skill.push_back(1.0 - own / ref);
        }
        if (!s.seasons.empty()) series.push_back(std::move(s));
      }
      if (series.empty()) continue;
      std::string base = out_dir + "/skill_" + to_string(r) + "_" + score;
      verify::write_skill_csv(base + ".csv", score, series);
      verify::write_skill_svg(base + ".svg", series,
                              std::string(score) + " skill, " + to_string(r));
    }
  }
}

void write_diagram_files(const verify::ScoreReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::set<std::string> methods;
  for (const auto& c : report.cases) methods.insert(c.method);
  for (const auto& m : methods) {
    auto upit = verify::upit_samples_of(report, m);
    auto pops = verify::pop_cases_of(report, m);
    if (upit.empty()) continue;
    auto hist = verify::upit_histogram(upit, 20);
    verify::write_upit_csv(out_dir + "/upit_" + m + ".csv", hist);
    verify::write_upit_svg(out_dir + "/upit_" + m + ".svg", hist, "uPIT " + m);
    auto rel = verify::reliability(pops, 10);
    verify::write_reliability_csv(out_dir + "/reliability_" + m + ".csv", rel);
    verify::write_reliability_svg(out_dir + "/reliability_" + m + ".svg", rel,
                                  "reliability " + m);
    auto murphy = verify::murphy_curve(pops);
    verify::write_murphy_csv(out_dir + "/murphy_" + m + ".csv", murphy);
    verify::write_murphy_svg(out_dir + "/murphy_" + m + ".svg", murphy, "Murphy " + m);
  }
}

// ---- consistency histogram ---------------------------------------------------

Hist2d histogram2d(const std::vector<std::pair<double, double>>& xy, int bins, double vmax) {
  if (bins < 1 || !(vmax > 0)) throw Error("histogram2d: invalid bins or range");
  Hist2d h;
  h.bins = bins;
  h.vmax = vmax;
  h.counts.assign(bins, std::vector<std::size_t>(bins, 0));
  for (const auto& [x, y] : xy) {
    int bx = std::min(bins - 1, int(std::max(x, 0.0) / vmax * bins));
    int by = std::min(bins - 1, int(std::max(y, 0.0) / vmax * bins));
    ++h.counts[bx][by];
    ++h.total;
  }
  return h;
}

void write_hist2d_csv(const std::string& path, const Hist2d& hist) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "x_lo,x_hi,y_lo,y_hi,count\n";
  double w = hist.vmax / hist.bins;
  for (int bx = 0; bx < hist.bins; ++bx)
    for (int by = 0; by < hist.bins; ++by)
      out << format_double(bx * w) << ',' << format_double((bx + 1) * w) << ','
          << format_double(by * w) << ',' << format_double((by + 1) * w) << ','
          << hist.counts[bx][by] << '\n';
}

std::vector<std::pair<double, double>> match_observations(
    const std::map<std::string, ingest::StationSeries>& a,
    const std::map<std::string, ingest::StationSeries>& b) {
  std::vector<std::pair<double, double>> out;
  for (const auto& [id, sa] : a) {
    auto itb = b.find(id);
    if (itb == b.end()) continue;
    for (const auto& [d, va] : sa.days) {
      auto itd = itb->second.days.find(d);
      if (itd != itb->second.days.end()) out.emplace_back(va, itd->second);
    }
  }
  return out;
}

}  // namespace pqpf::pipeline
