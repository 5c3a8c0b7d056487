#include "pqpf/verify.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "pqpf/errors.hpp"

namespace pqpf::verify {

double crps(const PredictiveDistribution& dist, double y) {
  if (!(y >= 0)) throw Error("crps requires y >= 0");
  return dist.crps(y);
}

double absolute_error_median(const PredictiveDistribution& dist, double y) {
  if (!(y >= 0)) throw Error("absolute_error_median requires y >= 0");
  return std::fabs(dist.median() - y);
}

double brier(double pop, bool occurred) {
  if (!(pop >= 0.0 && pop <= 1.0)) throw Error("PoP must be in [0,1]");
  double d = occurred ? 1.0 - pop : pop;
  return d * d;
}

double elementary_score(double theta, double pop, bool occurred) {
  if (!(theta > 0.0 && theta < 1.0)) throw Error("theta must be in (0,1)");
  if (occurred) return pop <= theta ? 1.0 - theta : 0.0;
  return pop > theta ? theta : 0.0;
}

MurphyCurve murphy_curve(const std::vector<PopCase>& cases,
                         const std::vector<double>& extra_thetas) {
  if (cases.empty()) throw EmptyInputError("murphy_curve: no cases");

  std::set<double> breaks{0.0, 1.0};
  for (const auto& c : cases)
    if (c.pop > 0.0 && c.pop < 1.0) breaks.insert(c.pop);
  for (double t : extra_thetas)
    if (t > 0.0 && t < 1.0) breaks.insert(t);

  MurphyCurve curve;
  const double n = double(cases.size());
  for (double t : breaks) {
    if (t <= 0.0 || t >= 1.0) continue;
    double sum = 0;
    for (const auto& c : cases) sum += elementary_score(t, c.pop, c.occurred);
    curve.thetas.push_back(t);
    curve.scores.push_back(sum / n);
  }

  // The mean elementary score is linear in theta between consecutive
  // breakpoints, so integrating segment by segment is exact.
  double area = 0;
  std::vector<double> edges(breaks.begin(), breaks.end());
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    double a = edges[s], b = edges[s + 1];
    double mid = 0.5 * (a + b);
    double n_false_alarm = 0, n_miss = 0;  // indicator counts, constant on (a,b)
    for (const auto& c : cases) {
      if (!c.occurred && c.pop > mid) n_false_alarm += 1;
      if (c.occurred && c.pop <= mid) n_miss += 1;
    }
    double sq = 0.5 * (b * b - a * a);
    area += (n_false_alarm * sq + n_miss * ((b - a) - sq)) / n;
  }
  curve.area = area;
  return curve;
}

UpitSample upit(const std::vector<double>& members, double y, SplitMix64& rng) {
  if (members.empty()) throw EmptyInputError("upit: empty ensemble");
  const double m = double(members.size());
  std::size_t below = 0, ties = 0;
  for (double v : members) {
    below += v < y;
    ties += v == y;
  }
  UpitSample s;
  s.randomized = true;
  std::size_t rank = below + 1;
  if (ties > 0) rank = below + 1 + std::size_t(rng.uniform() * double(ties + 1) * (1.0 - 1e-16));
  s.value = (double(rank - 1) + rng.uniform()) / (m + 1.0);
  return s;
}

UpitSample upit(const PredictiveDistribution& dist, double y, SplitMix64& rng) {
  UpitSample s;
  if (y > 0.0) {
    s.value = dist.cdf(y);
    s.randomized = false;
  } else {
    s.value = rng.uniform() * dist.prob_zero();
    s.randomized = true;
  }
  return s;
}

UpitHistogram upit_histogram(const std::vector<UpitSample>& samples, int bins) {
  if (samples.empty()) throw EmptyInputError("upit_histogram: no samples");
  if (bins < 1) throw Error("upit_histogram: bins must be positive");
  UpitHistogram h;
  h.bins = bins;
  h.total = samples.size();
  h.counts.assign(bins, 0);
  for (const auto& s : samples) {
    int b = std::min(bins - 1, int(s.value * bins));
    if (b < 0) b = 0;
    ++h.counts[std::size_t(b)];
  }
  h.density.resize(bins);
  for (int b = 0; b < bins; ++b) {
    h.density[b] = double(h.counts[b]) * bins / double(h.total);
    h.max_density = std::max(h.max_density, h.density[b]);
  }
  return h;
}

double chi_square_uniform(const UpitHistogram& hist) {
  double expected = double(hist.total) / hist.bins;
  double stat = 0;
  for (auto c : hist.counts) {
    double d = double(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

bool uniform_at_level(const UpitHistogram& hist, double alpha) {
  boost::math::chi_squared dist(hist.bins - 1);
  return chi_square_uniform(hist) <= boost::math::quantile(dist, 1.0 - alpha);
}

ReliabilityDiagram reliability(const std::vector<PopCase>& cases, int bins) {
  if (bins < 1) throw Error("reliability: bins must be positive");
  ReliabilityDiagram d;
  d.total = cases.size();
  d.bins.resize(bins);
  std::vector<double> pop_sum(bins, 0), occ_sum(bins, 0);
  for (int b = 0; b < bins; ++b) {
    d.bins[b].lo = double(b) / bins;
    d.bins[b].hi = double(b + 1) / bins;
  }
  for (const auto& c : cases) {
    if (!(c.pop >= 0.0 && c.pop <= 1.0)) throw Error("PoP must be in [0,1]");
    int b = std::min(bins - 1, int(c.pop * bins));
    pop_sum[b] += c.pop;
    occ_sum[b] += c.occurred ? 1.0 : 0.0;
    ++d.bins[b].count;
  }
  for (int b = 0; b < bins; ++b) {
    if (d.bins[b].count > 0) {
      d.bins[b].mean_pop = pop_sum[b] / double(d.bins[b].count);
      d.bins[b].event_freq = occ_sum[b] / double(d.bins[b].count);
    }
  }
  return d;
}

const char* to_string(StabilityMark m) {
  switch (m) {
    case StabilityMark::MinusMinus: return "--";
    case StabilityMark::Minus: return "-";
    case StabilityMark::Zero: return "0";
    case StabilityMark::Plus: return "+";
    case StabilityMark::PlusPlus: return "++";
  }
  return "0";
}

namespace {

double binomial_tail(int s, int k) {
  // sum_{j>=k} C(s,j) / 2^s
  if (k <= 0) return 1.0;
  double sum = 0;
  double c = 1.0;  // C(s,0)
  for (int j = 0; j <= s; ++j) {
    if (j >= k) sum += c;
    c = c * double(s - j) / double(j + 1);
  }
  return sum / std::pow(2.0, s);
}

}  // namespace

SkillResult skill_and_stability(const std::vector<SeasonScore>& method,
                                const std::vector<SeasonScore>& reference) {
  if (method.size() != reference.size() || method.empty())
    throw AlignmentError("skill_and_stability: season lists differ");
  SkillResult r;
  r.seasons = int(method.size());
  double mw = 0, rw = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < method.size(); ++i) {
    if (method[i].season != reference[i].season || method[i].n != reference[i].n)
      throw AlignmentError("skill_and_stability: case sets are not identical per season");
    r.better += method[i].mean < reference[i].mean;
    r.worse += method[i].mean > reference[i].mean;
    mw += method[i].mean * double(method[i].n);
    rw += reference[i].mean * double(reference[i].n);
    total += method[i].n;
  }
  if (total == 0) throw AlignmentError("skill_and_stability: empty seasons");
  double mm = mw / double(total), rm = rw / double(total);
  r.skill = rm > 0 ? 1.0 - mm / rm : 0.0;

  const int s = r.seasons;
  if (r.better == s)
    r.mark = StabilityMark::PlusPlus;
  else if (r.worse == s)
    r.mark = StabilityMark::MinusMinus;
  else if (r.better == s - 1 && r.better > r.worse)
    r.mark = StabilityMark::Plus;
  else if (r.worse == s - 1 && r.worse > r.better)
    r.mark = StabilityMark::Minus;
  else
    r.mark = StabilityMark::Zero;

  r.p_value = binomial_tail(s, std::max(r.better, r.worse));
  return r;
}

ScoreReport score_cases(const std::vector<MethodCase>& cases, std::uint64_t master_seed,
                        const std::string& reference_method) {
  if (cases.empty()) throw EmptyInputError("score_cases: no cases");
  ScoreReport report;
  report.reference_method = reference_method;
  report.master_seed = master_seed;
  report.cases.reserve(cases.size());

  for (const auto& c : cases) {
    if (!c.dist) throw Error("score_cases: missing distribution for " + c.site_id);
    ScoredCase s;
    s.method = c.method;
    s.site_id = c.site_id;
    s.region = c.region;
    s.date = c.date;
    s.window_days = c.window_days;
    s.season = c.season;
    s.obs = c.obs;
    s.crps = crps(*c.dist, c.obs);
    s.ae = absolute_error_median(*c.dist, c.obs);
    s.pop = c.dist->pop();
    s.occurred = c.obs >= c.dist->pop_threshold();
    s.bs = brier(s.pop, s.occurred);

    s.upit_seed = derive_seed(master_seed, c.site_id, c.date.time_since_epoch().count(),
                              fnv1a64(c.method));
    SplitMix64 rng(s.upit_seed);
    const auto* ens = dynamic_cast<const EmpiricalEnsemble*>(c.dist.get());
    UpitSample u = ens ? upit(ens->members(), c.obs, rng) : upit(*c.dist, c.obs, rng);
    s.upit = u.value;
    s.upit_randomized = u.randomized;
    report.cases.push_back(std::move(s));
  }

  struct Acc {
    double crps = 0, ae = 0, bs = 0;
    std::size_t n = 0;
  };
  std::map<std::tuple<Region, int, std::string>, Acc> acc;
  for (const auto& s : report.cases) {
    Acc& a = acc[{s.region, s.season, s.method}];
    a.crps += s.crps;
    a.ae += s.ae;
    a.bs += s.bs;
    ++a.n;
  }
  for (const auto& [key, a] : acc) {
    Aggregate g;
    g.region = std::get<0>(key);
    g.season = std::get<1>(key);
    g.method = std::get<2>(key);
    g.mean_crps = a.crps / double(a.n);
    g.mae = a.ae / double(a.n);
    g.mean_bs = a.bs / double(a.n);
    g.n = a.n;
    report.aggregates.push_back(std::move(g));
  }

  // skill and stability per (region, method, score) against the reference
  std::set<std::string> methods;
  std::set<Region> regions;
  for (const auto& a : report.aggregates) {
    methods.insert(a.method);
    regions.insert(a.region);
  }
  if (!methods.count(reference_method)) return report;

  auto seasonal = [&](Region region, const std::string& method, const char* score) {
    std::vector<SeasonScore> out;
    for (const auto& a : report.aggregates) {
      if (a.region != region || a.method != method) continue;
      double v = std::string(score) == "bs" ? a.mean_bs
               : std::string(score) == "crps" ? a.mean_crps
                                              : a.mae;
      out.push_back({a.season, v, a.n});
    }
    std::sort(out.begin(), out.end(),
              [](const SeasonScore& x, const SeasonScore& y) { return x.season < y.season; });
    return out;
  };

  for (Region region : regions) {
    for (const auto& method : methods) {
      for (const char* score : {"bs", "crps", "mae"}) {
        auto ms = seasonal(region, method, score);
        auto rs = seasonal(region, reference_method, score);
        if (ms.empty() || ms.size() != rs.size()) continue;
        MethodSkill k;
        k.region = region;
        k.method = method;
        k.score = score;
        double w = 0;
        std::size_t n = 0;
        for (const auto& x : ms) {
          w += x.mean * double(x.n);
          n += x.n;
        }
        k.mean = w / double(n);
        k.result = skill_and_stability(ms, rs);
        report.skills.push_back(std::move(k));
      }
    }
  }
  return report;
}

// ---- JSON serialization ----------------------------------------------------

namespace {

nlohmann::json case_to_json(const ScoredCase& s) {
  return {{"method", s.method},
          {"site", s.site_id},
          {"region", to_string(s.region)},
          {"date", format_date(s.date)},
          {"window_days", s.window_days},
          {"season", s.season},
          {"obs", s.obs},
          {"crps", s.crps},
          {"ae", s.ae},
          {"bs", s.bs},
          {"pop", s.pop},
          {"occurred", s.occurred},
          {"upit", s.upit},
          {"upit_randomized", s.upit_randomized},
          {"upit_seed", s.upit_seed}};
}

ScoredCase case_from_json(const nlohmann::json& j) {
  ScoredCase s;
  s.method = j.at("method").get<std::string>();
  s.site_id = j.at("site").get<std::string>();
  s.region = region_from_string(j.at("region").get<std::string>());
  s.date = parse_date(j.at("date").get<std::string>());
  s.window_days = j.at("window_days").get<int>();
  s.season = j.at("season").get<int>();
  s.obs = j.at("obs").get<double>();
  s.crps = j.at("crps").get<double>();
  s.ae = j.at("ae").get<double>();
  s.bs = j.at("bs").get<double>();
  s.pop = j.at("pop").get<double>();
  s.occurred = j.at("occurred").get<bool>();
  s.upit = j.at("upit").get<double>();
  s.upit_randomized = j.at("upit_randomized").get<bool>();
  s.upit_seed = j.at("upit_seed").get<std::uint64_t>();
  return s;
}

StabilityMark mark_from_string(const std::string& s) {
  if (s == "--") return StabilityMark::MinusMinus;
  if (s == "-") return StabilityMark::Minus;
  if (s == "+") return StabilityMark::Plus;
  if (s == "++") return StabilityMark::PlusPlus;
  return StabilityMark::Zero;
}

}  // namespace

void save_report_json(const std::string& path, const ScoreReport& report) {
  nlohmann::json j;
  j["reference_method"] = report.reference_method;
  j["master_seed"] = report.master_seed;
  j["rng"] = report.rng;
  auto& cases = j["cases"] = nlohmann::json::array();
  for (const auto& c : report.cases) cases.push_back(case_to_json(c));
  auto& aggs = j["aggregates"] = nlohmann::json::array();
  for (const auto& a : report.aggregates) {
    aggs.push_back({{"region", to_string(a.region)},
                    {"season", a.season},
                    {"method", a.method},
                    {"mean_crps", a.mean_crps},
                    {"mae", a.mae},
                    {"mean_bs", a.mean_bs},
                    {"n", a.n}});
  }
  auto& skills = j["skills"] = nlohmann::json::array();
  for (const auto& k : report.skills) {
    skills.push_back({{"region", to_string(k.region)},
                      {"method", k.method},
                      {"score", k.score},
                      {"mean", k.mean},
                      {"skill", k.result.skill},
                      {"mark", to_string(k.result.mark)},
                      {"p_value", k.result.p_value},
                      {"better", k.result.better},
                      {"worse", k.result.worse},
                      {"seasons", k.result.seasons}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

ScoreReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in);
  ScoreReport r;
  r.reference_method = j.at("reference_method").get<std::string>();
  r.master_seed = j.at("master_seed").get<std::uint64_t>();
  r.rng = j.value("rng", "splitmix64");
  for (const auto& c : j.at("cases")) r.cases.push_back(case_from_json(c));
  for (const auto& a : j.at("aggregates")) {
    Aggregate g;
    g.region = region_from_string(a.at("region").get<std::string>());
    g.season = a.at("season").get<int>();
    g.method = a.at("method").get<std::string>();
    g.mean_crps = a.at("mean_crps").get<double>();
    g.mae = a.at("mae").get<double>();
    g.mean_bs = a.at("mean_bs").get<double>();
    g.n = a.at("n").get<std::size_t>();
    r.aggregates.push_back(std::move(g));
  }
  for (const auto& k : j.at("skills")) {
    MethodSkill s;
    s.region = region_from_string(k.at("region").get<std::string>());
    s.method = k.at("method").get<std::string>();
    s.score = k.at("score").get<std::string>();
    s.mean = k.at("mean").get<double>();
    s.result.skill = k.at("skill").get<double>();
    s.result.mark = mark_from_string(k.at("mark").get<std::string>());
    s.result.p_value = k.at("p_value").get<double>();
    s.result.better = k.at("better").get<int>();
    s.result.worse = k.at("worse").get<int>();
    s.result.seasons = k.at("seasons").get<int>();
    r.skills.push_back(std::move(s));
  }
  return r;
}

std::vector<UpitSample> upit_samples_of(const ScoreReport& report, const std::string& method) {
  std::vector<UpitSample> out;
  for (const auto& c : report.cases)
    if (c.method == method) out.push_back({c.upit, c.upit_randomized, c.upit_seed});
  return out;
}

std::vector<PopCase> pop_cases_of(const ScoreReport& report, const std::string& method) {
  std::vector<PopCase> out;
  for (const auto& c : report.cases)
    if (c.method == method) out.push_back({c.pop, c.occurred});
  return out;
}

}  // namespace pqpf::verify
