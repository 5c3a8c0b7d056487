#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pqpf/distribution.hpp"
#include "pqpf/rng.hpp"
#include "pqpf/types.hpp"

namespace pqpf::verify {

// CRPS of any predictive distribution: empirical ensembles use the exact
// pairwise formula, the censored GEV its closed form, BMA mixtures adaptive
// quadrature (absolute tolerance 1e-4 mm).
double crps(const PredictiveDistribution& dist, double y);

// |median - y|, the AE of the median point forecast.
double absolute_error_median(const PredictiveDistribution& dist, double y);

// (1-p)^2 if the event occurred, p^2 otherwise.
double brier(double pop, bool occurred);

// Elementary score at cost-loss ratio theta in (0,1).
double elementary_score(double theta, double pop, bool occurred);

struct PopCase {
  double pop = 0;
  bool occurred = false;
};

struct MurphyCurve {
  std::vector<double> thetas;  // evaluation grid including all pop breakpoints
  std::vector<double> scores;  // mean elementary score at each theta
  double area = 0;             // exact piecewise integral over (0,1); equals mean BS / 2
};

MurphyCurve murphy_curve(const std::vector<PopCase>& cases,
                         const std::vector<double>& extra_thetas = {});

struct UpitSample {
  double value = 0;
  bool randomized = false;
  std::uint64_t seed = 0;
};

// Ensemble uPIT: uniform draw on ((i-1)/(m+1), i/(m+1)) for the observation
// rank i; ties (including the all-dry case) first draw the rank uniformly
// among the tied positions.
UpitSample upit(const std::vector<double>& members, double y, SplitMix64& rng);

// CDF uPIT: F(y) for y > 0, uniform on (0, F(0)) when no precipitation is
// observed.
UpitSample upit(const PredictiveDistribution& dist, double y, SplitMix64& rng);

struct UpitHistogram {
  int bins = 20;
  std::size_t total = 0;
  std::vector<std::size_t> counts;
  std::vector<double> density;  // uniform == 1
  double max_density = 0;
};

UpitHistogram upit_histogram(const std::vector<UpitSample>& samples, int bins = 20);

// Pearson chi-square statistic of the histogram against uniformity.
double chi_square_uniform(const UpitHistogram& hist);
// True when the statistic stays below the chi-square(bins-1) quantile at
// significance level alpha.
bool uniform_at_level(const UpitHistogram& hist, double alpha);

struct ReliabilityBin {
  double lo = 0, hi = 0;
  double mean_pop = 0;
  double event_freq = 0;
  std::size_t count = 0;
};

struct ReliabilityDiagram {
  std::vector<ReliabilityBin> bins;
  std::size_t total = 0;
};

ReliabilityDiagram reliability(const std::vector<PopCase>& cases, int bins = 10);

enum class StabilityMark { MinusMinus, Minus, Zero, Plus, PlusPlus };
const char* to_string(StabilityMark m);

struct SeasonScore {
  int season = 0;
  double mean = 0;
  std::size_t n = 0;
};

struct SkillResult {
  double skill = 0;     // 1 - mean(method) / mean(reference)
  StabilityMark mark = StabilityMark::Zero;
  double p_value = 1;   // one-sided sign-test tail (orderings at least as extreme) / 2^S
  int better = 0;
  int worse = 0;
  int seasons = 0;
};

// Requires both methods scored on identical case sets per season.
SkillResult skill_and_stability(const std::vector<SeasonScore>& method,
                                const std::vector<SeasonScore>& reference);

// ---- corpus scoring -------------------------------------------------------

struct MethodCase {
  std::string method;
  std::string site_id;
  Region region = Region::Other;
  Date date{};  // observation day closing the window
  int window_days = 1;
  int season = 0;
  std::shared_ptr<const PredictiveDistribution> dist;
  double obs = 0;
};

struct ScoredCase {
  std::string method;
  std::string site_id;
  Region region = Region::Other;
  Date date{};
  int window_days = 1;
  int season = 0;
  double obs = 0;
  double crps = 0;
  double ae = 0;
  double bs = 0;
  double pop = 0;
  bool occurred = false;
  double upit = 0;
  bool upit_randomized = false;
  std::uint64_t upit_seed = 0;
};

struct Aggregate {
  Region region = Region::Other;
  int season = 0;
  std::string method;
  double mean_crps = 0;
  double mae = 0;
  double mean_bs = 0;
  std::size_t n = 0;
};

struct MethodSkill {
  Region region = Region::Other;
  std::string method;
  std::string score;  // "bs", "crps", "mae"
  double mean = 0;
  SkillResult result;
};

struct ScoreReport {
  std::vector<ScoredCase> cases;
  std::vector<Aggregate> aggregates;  // per (region, season, method)
  std::vector<MethodSkill> skills;    // per (region, method, score) vs reference
  std::string reference_method = "epc";
  std::uint64_t master_seed = 0;
  std::string rng = "splitmix64";
};

// Scores every case, aggregates per (region, season, method) and attaches
// skill/stability marks against the reference method.  uPIT draws derive
// their stream from (master_seed, site, date, method).
ScoreReport score_cases(const std::vector<MethodCase>& cases, std::uint64_t master_seed,
                        const std::string& reference_method = "epc");

void save_report_json(const std::string& path, const ScoreReport& report);
ScoreReport load_report_json(const std::string& path);

std::vector<UpitSample> upit_samples_of(const ScoreReport& report, const std::string& method);
std::vector<PopCase> pop_cases_of(const ScoreReport& report, const std::string& method);

}  // namespace pqpf::verify
