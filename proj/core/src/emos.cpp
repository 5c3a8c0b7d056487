#include "pqpf/emos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "pqpf/distribution.hpp"
#include "pqpf/errors.hpp"
#include "pqpf/optim.hpp"

namespace pqpf::emos {

EmosPredictors compute_predictors(const EnsembleForecast& f) {
  f.validate();
  EmosPredictors p;
  p.hres = f.tagged_value(MemberTag::Hres);
  p.cnt = f.tagged_value(MemberTag::Cnt);

  double ens_sum = 0;
  std::size_t ens_n = 0;
  std::size_t zero_n = 0;
  for (const auto& m : f.members) {
    if (m.tag == MemberTag::Ens) {
      ens_sum += m.value;
      ++ens_n;
    }
    zero_n += m.value < kPopThresholdMm;
  }
  if (ens_n == 0) {
    // degenerate tagging (e.g. RMM-style inputs): fall back to all members
    for (const auto& m : f.members) ens_sum += m.value;
    ens_n = f.members.size();
  }
  p.ens_mean = ens_sum / double(ens_n);
  p.frac_zero = double(zero_n) / double(f.members.size());

  const auto values = f.values();
  const std::size_t m = values.size();
  if (m < 2) {
    p.mean_diff = 0;
    p.single_member = true;
  } else {
    double sum = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) sum += std::fabs(values[i] - values[j]);
    p.mean_diff = sum / (double(m) * double(m));
  }
  return p;
}

double EmosParams::location(const EmosPredictors& p) const {
  double mu = a0 + a3 * p.ens_mean + a4 * p.frac_zero;
  if (a1) mu += *a1 * p.hres.value_or(0.0);
  if (a2) mu += *a2 * p.cnt.value_or(0.0);
  return mu;
}

namespace {

constexpr double kXiMid = 0.5 * (kXiMin + kXiMax);
constexpr double kXiHalf = 0.5 * (kXiMax - kXiMin);
constexpr double kSigmaObjectiveFloor = 1e-4;

double xi_from_raw(double raw) { return kXiMid + kXiHalf * std::tanh(raw); }

double raw_from_xi(double xi) {
  double t = (xi - kXiMid) / kXiHalf;
  t = std::clamp(t, -0.999999, 0.999999);
  return std::atanh(t);
}

struct Layout {
  bool has_hres = false;
  bool has_cnt = false;
  std::size_t size() const { return 5 + has_hres + has_cnt + 2; }  // a.., b0, b1, xi_raw
};

std::vector<double> pack(const EmosParams& p, const Layout& lay) {
  std::vector<double> x;
  x.push_back(p.a0);
  if (lay.has_hres) x.push_back(p.a1.value_or(0.0));
  if (lay.has_cnt) x.push_back(p.a2.value_or(0.0));
  x.push_back(p.a3);
  x.push_back(p.a4);
  x.push_back(p.b0);
  x.push_back(p.b1);
  x.push_back(raw_from_xi(p.xi));
  return x;
}

EmosParams unpack(const std::vector<double>& x, const Layout& lay) {
  EmosParams p;
  std::size_t i = 0;
  p.a0 = x[i++];
  if (lay.has_hres) p.a1 = x[i++];
  if (lay.has_cnt) p.a2 = x[i++];
  p.a3 = x[i++];
  p.a4 = x[i++];
  p.b0 = x[i++];
  p.b1 = x[i++];
  p.xi = xi_from_raw(x[i++]);
  return p;
}

double mean_crps(const EmosParams& p, const std::vector<EmosTrainingPair>& training) {
  double sum = 0;
  for (const auto& t : training) {
    double mu = p.location(t.predictors);
    double sigma = std::max(p.scale(t.predictors), kSigmaObjectiveFloor);
    sum += crps_censored_gev(mu, sigma, p.xi, t.obs_mm);
  }
  return sum / double(training.size());
}

EmosParams regression_start(const std::vector<EmosTrainingPair>& training, const Layout& lay) {
  const std::size_t n = training.size();
  const std::size_t k = 3 + lay.has_hres + lay.has_cnt;  // 1, (hres), (cnt), ens_mean, frac_zero
  Eigen::MatrixXd design(n, k);
  Eigen::VectorXd y(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& p = training[r].predictors;
    std::size_t c = 0;
    design(r, c++) = 1.0;
    if (lay.has_hres) design(r, c++) = p.hres.value_or(0.0);
    if (lay.has_cnt) design(r, c++) = p.cnt.value_or(0.0);
    design(r, c++) = p.ens_mean;
    design(r, c) = p.frac_zero;
    y(r) = training[r].obs_mm;
  }
  Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);

  Eigen::VectorXd resid = (y - design * beta).cwiseAbs();
  Eigen::MatrixXd sd(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    sd(r, 0) = 1.0;
    sd(r, 1) = training[r].predictors.mean_diff;
  }
  Eigen::VectorXd b = sd.colPivHouseholderQr().solve(resid);

  EmosParams p;
  std::size_t c = 0;
  p.a0 = beta(c++);
  if (lay.has_hres) p.a1 = beta(c++);
  if (lay.has_cnt) p.a2 = beta(c++);
  p.a3 = beta(c++);
  p.a4 = beta(c);
  p.b0 = std::max(b(0), 0.05);
  p.b1 = b(1);
  p.xi = 0.1;
  return p;
}

EmosParams climatological_start(const std::vector<EmosTrainingPair>& training,
                                const Layout& lay) {
  double mean = 0;
  for (const auto& t : training) mean += t.obs_mm;
  mean /= double(training.size());
  double var = 0;
  for (const auto& t : training) var += (t.obs_mm - mean) * (t.obs_mm - mean);
  double sd = std::sqrt(var / double(training.size()));

  EmosParams p;
  p.a0 = mean;
  if (lay.has_hres) p.a1 = 0.0;
  if (lay.has_cnt) p.a2 = 0.0;
  p.a3 = 0.0;
  p.a4 = 0.0;
  p.b0 = std::max(sd, 0.1);
  p.b1 = 0.0;
  p.xi = 0.1;
  return p;
}

}  // namespace

EmosFit fit_emos(const std::vector<EmosTrainingPair>& training, const EmosParams* warm_start,
                 const EmosFitOptions& options) {
  if (training.size() < options.min_training_pairs)
    throw Error("fit_emos: need at least " + std::to_string(options.min_training_pairs) +
                " training pairs, got " + std::to_string(training.size()));
  bool any_wet = false;
  for (const auto& t : training) {
    if (!std::isfinite(t.obs_mm) || t.obs_mm < 0)
      throw Error("fit_emos: observations must be finite and nonnegative");
    any_wet |= t.obs_mm >= kPopThresholdMm;
  }
  if (!any_wet) throw DegenerateTrainingError("fit_emos: training observations are all zero");

  Layout lay;
  lay.has_hres = std::all_of(training.begin(), training.end(),
                             [](const EmosTrainingPair& t) { return bool(t.predictors.hres); });
  lay.has_cnt = std::all_of(training.begin(), training.end(),
                            [](const EmosTrainingPair& t) { return bool(t.predictors.cnt); });

  auto objective = [&](const std::vector<double>& x) {
    return mean_crps(unpack(x, lay), training);
  };

  std::vector<EmosParams> starts{climatological_start(training, lay),
                                 regression_start(training, lay)};
  if (warm_start) {
    EmosParams w = *warm_start;
    if (!lay.has_hres) w.a1.reset();
    if (!lay.has_cnt) w.a2.reset();
    if (lay.has_hres && !w.a1) w.a1 = 0.0;
    if (lay.has_cnt && !w.a2) w.a2 = 0.0;
    starts.push_back(w);
  }

  // the most promising start gets the full budget, the others a quarter
  std::vector<double> start_fx(starts.size());
  std::size_t best_start = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    start_fx[i] = objective(pack(starts[i], lay));
    if (start_fx[i] < start_fx[best_start]) best_start = i;
  }

  EmosFit best;
  double best_fx = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    NelderMeadOptions nm;
    nm.max_iterations =
        i == best_start ? options.max_iterations : std::max(options.max_iterations / 4, 100);
    nm.rel_tol = options.rel_tol;
    std::vector<double> x0 = pack(starts[i], lay);
    std::vector<double> steps(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) steps[j] = 0.25 * std::fabs(x0[j]) + 0.1;
    steps.back() = 0.3;  // xi_raw
    NelderMeadResult r = nelder_mead(objective, x0, steps, nm);
    if (r.fx < best_fx) {
      best_fx = r.fx;
      best.params = unpack(r.x, lay);
      best.converged = r.converged;
      best.iterations = r.iterations;
      best.trace = std::move(r.best_trace);
    }
  }
  // a capped simplex usually recovers after a restart with a fresh simplex
  for (int restart = 0; restart < 2 && !best.converged; ++restart) {
    NelderMeadOptions nm;
    nm.max_iterations = options.max_iterations;
    nm.rel_tol = options.rel_tol;
    std::vector<double> x0 = pack(best.params, lay);
    std::vector<double> steps(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) steps[j] = 0.02 * std::fabs(x0[j]) + 0.02;
    NelderMeadResult r = nelder_mead(objective, x0, steps, nm);
    if (r.fx <= best_fx) {
      best_fx = r.fx;
      best.params = unpack(r.x, lay);
      best.converged = r.converged;
      best.iterations += r.iterations;
      best.trace.insert(best.trace.end(), r.best_trace.begin(), r.best_trace.end());
    }
  }
  best.train_crps = best_fx;
  best.initial_crps = start_fx[best_start];
  return best;
}

CensoredGev predict_emos(const EmosParams& params, const EmosPredictors& predictors,
                         bool* sigma_floored) {
  double mu = params.location(predictors);
  double sigma = params.scale(predictors);
  bool floored = !(sigma >= kSigmaFloorMm);
  if (floored) sigma = kSigmaFloorMm;
  if (sigma_floored) *sigma_floored = floored;
  return CensoredGev(mu, sigma, params.xi);
}

void save_emos_params(const std::string& path, const EmosParams& params) {
  nlohmann::json j;
  j["model"] = "emos-censored-gev";
  j["a0"] = params.a0;
  if (params.a1) j["a1_hres"] = *params.a1;
  if (params.a2) j["a2_cnt"] = *params.a2;
  j["a3_ens_mean"] = params.a3;
  j["a4_frac_zero"] = params.a4;
  j["b0"] = params.b0;
  j["b1_mean_diff"] = params.b1;
  j["xi"] = params.xi;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

EmosParams load_emos_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("model", "") != "emos-censored-gev")
    throw FormatError("'" + path + "' does not hold EMOS parameters");
  EmosParams p;
  p.a0 = j.at("a0").get<double>();
  if (j.contains("a1_hres")) p.a1 = j.at("a1_hres").get<double>();
  if (j.contains("a2_cnt")) p.a2 = j.at("a2_cnt").get<double>();
  p.a3 = j.at("a3_ens_mean").get<double>();
  p.a4 = j.at("a4_frac_zero").get<double>();
  p.b0 = j.at("b0").get<double>();
  p.b1 = j.at("b1_mean_diff").get<double>();
  p.xi = j.at("xi").get<double>();
  return p;
}

}  // namespace pqpf::emos
