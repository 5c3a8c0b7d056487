#include "pqpf/bma.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "pqpf/errors.hpp"

namespace pqpf::bma {

namespace {

constexpr double kMeanFloor = 1e-6;
constexpr double kVarFloor = 1e-8;
constexpr double kDensityFloor = 1e-300;
constexpr double kLogitCap = 30.0;

inline double cbrt_pos(double x) { return std::cbrt(x); }

inline double logistic(double eta) {
  if (eta > kLogitCap) return 1.0 - 1e-13;
  if (eta < -kLogitCap) return 1e-13;
  return 1.0 / (1.0 + std::exp(-eta));
}

inline bool is_dry(double amount) { return amount < kPopThresholdMm; }

// gamma density of the cube-root accumulation mapped to a density in y,
// with mean/variance clamped into the valid domain
double amount_density_clamped(const BmaComponentParams& comp, double c0, double c1, double x,
                              double y) {
  double m = std::max(comp.b0 + comp.b1 * cbrt_pos(x), kMeanFloor);
  double v = std::max(c0 + c1 * x, kVarFloor);
  double shape = m * m / v;
  double scale = v / m;
  double z = cbrt_pos(y);
  double dens = boost::math::pdf(boost::math::gamma_distribution<double>(shape, scale), z);
  return dens * (1.0 / 3.0) * std::pow(y, -2.0 / 3.0);
}

}  // namespace

std::string group_key(const EnsembleMember& m) {
  if (m.origin.empty()) return to_string(m.tag);
  return m.origin + "/" + to_string(m.tag);
}

double component_pop(const BmaComponentParams& comp, double x) {
  if (!(x >= 0)) throw Error("component_pop requires x >= 0");
  double eta = comp.a0 + comp.a1 * cbrt_pos(x) + (is_dry(x) ? comp.a2 : 0.0);
  return logistic(eta);
}

double component_amount_density(const BmaComponentParams& comp, double c0, double c1, double x,
                                double y) {
  if (!(y > 0)) throw Error("component_amount_density requires y > 0");
  double m = comp.b0 + comp.b1 * cbrt_pos(x);
  double v = c0 + c1 * x;
  if (!(m > 0) || !(v > 0))
    throw ComponentDomainError("nonpositive Gamma mean or variance at member value " +
                               std::to_string(x));
  return amount_density_clamped(comp, c0, c1, x, y);
}

LogisticFit fit_logistic_pop(const std::vector<double>& member_values,
                             const std::vector<bool>& dry) {
  if (member_values.size() != dry.size() || member_values.empty())
    throw Error("fit_logistic_pop: input size mismatch");
  const std::size_t n = member_values.size();
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = cbrt_pos(member_values[i]);
    design(i, 2) = is_dry(member_values[i]) ? 1.0 : 0.0;
    y(i) = dry[i] ? 1.0 : 0.0;
  }

  Eigen::Vector3d beta = Eigen::Vector3d::Zero();
  LogisticFit fit;
  Eigen::Matrix3d info = Eigen::Matrix3d::Identity();
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd p(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = logistic(eta(i));
      w(i) = std::max(p(i) * (1.0 - p(i)), 1e-10);
    }
    info = design.transpose() * w.asDiagonal() * design;
    info.diagonal().array() += 1e-8;  // ridge against separation
    Eigen::Vector3d grad = design.transpose() * (y - p);
    Eigen::Vector3d delta = info.ldlt().solve(grad);
    beta += delta;
    for (int k = 0; k < 3; ++k) beta(k) = std::clamp(beta(k), -kLogitCap, kLogitCap);
    fit.iterations = iter + 1;
    if (delta.cwiseAbs().maxCoeff() < 1e-10) {
      fit.converged = true;
      break;
    }
  }
  Eigen::Matrix3d cov = info.inverse();
  fit.a0 = beta(0);
  fit.a1 = beta(1);
  fit.a2 = beta(2);
  fit.se0 = std::sqrt(std::max(cov(0, 0), 0.0));
  fit.se1 = std::sqrt(std::max(cov(1, 1), 0.0));
  fit.se2 = std::sqrt(std::max(cov(2, 2), 0.0));
  return fit;
}

namespace {

struct TrainingView {
  std::vector<std::string> groups;
  // per case: member group indices, member values, observation
  struct Case {
    std::vector<int> group;
    std::vector<double> x;
    double y = 0;
  };
  std::vector<Case> cases;
};

TrainingView make_view(const std::vector<EnsembleForecast>& forecasts,
                       const std::vector<double>& observations) {
  TrainingView view;
  std::map<std::string, int> index;
  for (std::size_t t = 0; t < forecasts.size(); ++t) {
    TrainingView::Case c;
    c.y = observations[t];
    for (const auto& m : forecasts[t].members) {
      std::string key = group_key(m);
      auto [it, inserted] = index.try_emplace(key, int(view.groups.size()));
      if (inserted) view.groups.push_back(key);
      c.group.push_back(it->second);
      c.x.push_back(m.value);
    }
    view.cases.push_back(std::move(c));
  }
  return view;
}

// observed-data log-likelihood
double log_likelihood(const TrainingView& view, const BmaParams& params) {
  double ll = 0;
  for (const auto& c : view.cases) {
    // per-group member counts of this case, for the exchangeable weight split
    std::vector<int> counts(params.components.size(), 0);
    for (int g : c.group) ++counts[g];
    double lik = 0;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      int g = c.group[i];
      double w = params.weights[g] / double(counts[g]);
      const auto& comp = params.components[g];
      double p0 = component_pop(comp, c.x[i]);
      double gi = is_dry(c.y) ? p0
                              : (1.0 - p0) * amount_density_clamped(comp, params.c0, params.c1,
                                                                    c.x[i], c.y);
      lik += w * std::max(gi, kDensityFloor);
    }
    ll += std::log(std::max(lik, kDensityFloor));
  }
  return ll;
}

// constrained maximizer of sum_g r_g log w_g over the floored simplex
std::vector<double> floored_weights(std::vector<double> resp_mass, double floor) {
  const std::size_t k = resp_mass.size();
  if (k == 1) return {1.0};
  double total = 0;
  for (double r : resp_mass) total += r;
  if (total <= 0) return std::vector<double>(k, 1.0 / double(k));

  std::vector<bool> pinned(k, false);
  for (;;) {
    double pinned_mass = 0;
    double free_resp = 0;
    for (std::size_t g = 0; g < k; ++g) {
      if (pinned[g])
        pinned_mass += floor;
      else
        free_resp += resp_mass[g];
    }
    bool changed = false;
    std::vector<double> w(k);
    for (std::size_t g = 0; g < k; ++g) {
      if (pinned[g]) {
        w[g] = floor;
        continue;
      }
      w[g] = free_resp > 0 ? (1.0 - pinned_mass) * resp_mass[g] / free_resp : floor;
      if (w[g] < floor) {
        pinned[g] = true;
        changed = true;
      }
    }
    if (!changed) return w;
  }
}

}  // namespace

BmaFit fit_bma_em(const std::vector<EnsembleForecast>& forecasts,
                  const std::vector<double>& observations, const BmaEmOptions& options) {
  if (forecasts.size() != observations.size())
    throw Error("fit_bma_em: forecasts/observations size mismatch");
  if (forecasts.size() < options.min_training_pairs)
    throw Error("fit_bma_em: need at least " + std::to_string(options.min_training_pairs) +
                " training pairs, got " + std::to_string(forecasts.size()));
  for (double y : observations)
    if (!std::isfinite(y) || y < 0) throw Error("fit_bma_em: invalid observation");

  TrainingView view = make_view(forecasts, observations);
  const std::size_t k = view.groups.size();

  BmaFit fit;
  fit.params.components.resize(k);
  fit.params.weights.assign(k, 1.0 / double(k));

  // stage 1: logistic dry-probability models, one per group
  for (std::size_t g = 0; g < k; ++g) {
    std::vector<double> xs;
    std::vector<bool> dry;
    for (const auto& c : view.cases) {
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        if (c.group[i] != int(g)) continue;
        xs.push_back(c.x[i]);
        dry.push_back(is_dry(c.y));
      }
    }
    LogisticFit lf = fit_logistic_pop(xs, dry);
    auto& comp = fit.params.components[g];
    comp.group = view.groups[g];
    comp.a0 = lf.a0;
    comp.a1 = lf.a1;
    comp.a2 = lf.a2;
  }

  // wet cases drive the Gamma stage
  std::vector<const TrainingView::Case*> wet;
  for (const auto& c : view.cases)
    if (!is_dry(c.y)) wet.push_back(&c);

  if (wet.empty()) {
    fit.point_mass_only = true;
    fit.converged = true;
    for (auto& comp : fit.params.components) {
      comp.b0 = 0.5;
      comp.b1 = 0.5;
    }
    fit.params.c0 = 0.5;
    fit.params.c1 = 0.05;
    return fit;
  }

  // initial Gamma means: per-group regression of y^{1/3} on x^{1/3}
  for (std::size_t g = 0; g < k; ++g) {
    std::vector<double> xs, ys;
    for (const auto* c : wet) {
      for (std::size_t i = 0; i < c->x.size(); ++i) {
        if (c->group[i] != int(g)) continue;
        xs.push_back(cbrt_pos(c->x[i]));
        ys.push_back(cbrt_pos(c->y));
      }
    }
    auto& comp = fit.params.components[g];
    if (xs.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
      }
      mx /= double(xs.size());
      my /= double(xs.size());
      double sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
      }
      comp.b1 = sxx > 1e-12 ? sxy / sxx : 0.0;
      comp.b0 = my - comp.b1 * mx;
    }
  }
  {
    // initial shared variance: pooled residual variance, flat in x
    double ss = 0;
    std::size_t n = 0;
    for (const auto* c : wet) {
      for (std::size_t i = 0; i < c->x.size(); ++i) {
        const auto& comp = fit.params.components[c->group[i]];
        double r = cbrt_pos(c->y) - (comp.b0 + comp.b1 * cbrt_pos(c->x[i]));
        ss += r * r;
        ++n;
      }
    }
    fit.params.c0 = std::max(ss / double(n), 0.01);
    fit.params.c1 = 0.0;
  }

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // E-step: responsibilities per case and member; the denominators give the
    // observed-data log-likelihood of the current parameters for free
    double ll_now = 0;
    std::vector<double> resp_mass(k, 0.0);
    std::vector<std::vector<double>> wet_resp(wet.size());
    std::size_t wet_idx = 0;
    for (const auto& c : view.cases) {
      std::vector<int> counts(k, 0);
      for (int g : c.group) ++counts[g];
      std::vector<double> z(c.x.size());
      double denom = 0;
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        int g = c.group[i];
        const auto& comp = fit.params.components[g];
        double w = fit.params.weights[g] / double(counts[g]);
        double p0 = component_pop(comp, c.x[i]);
        double gi = is_dry(c.y) ? p0
                                : (1.0 - p0) * amount_density_clamped(comp, fit.params.c0,
                                                                      fit.params.c1, c.x[i], c.y);
        z[i] = w * std::max(gi, kDensityFloor);
        denom += z[i];
      }
      ll_now += std::log(std::max(denom, kDensityFloor));
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        z[i] /= denom;
        resp_mass[c.group[i]] += z[i];
      }
      if (!is_dry(c.y)) wet_resp[wet_idx++] = std::move(z);
    }
    if (iter == 0) fit.loglik_trace.push_back(ll_now);

    // M-step, weights: tied exchangeable members, floored simplex
    for (double& r : resp_mass) r /= double(view.cases.size());
    std::vector<double> new_weights = floored_weights(resp_mass, options.weight_floor);
    BmaParams stepped = fit.params;
    stepped.weights = new_weights;

    // M-step, Gamma means: per-group weighted least squares on cube roots
    BmaParams candidate = stepped;
    for (std::size_t g = 0; g < k; ++g) {
      double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
      for (std::size_t t = 0; t < wet.size(); ++t) {
        const auto& c = *wet[t];
        for (std::size_t i = 0; i < c.x.size(); ++i) {
          if (c.group[i] != int(g)) continue;
          double z = wet_resp[t][i];
          double xr = cbrt_pos(c.x[i]);
          double yr = cbrt_pos(c.y);
          sw += z;
          swx += z * xr;
          swy += z * yr;
          swxx += z * xr * xr;
          swxy += z * xr * yr;
        }
      }
      if (sw < 1e-10) continue;  // starved group keeps its coefficients
      double det = sw * swxx - swx * swx;
      auto& comp = candidate.components[g];
      if (std::fabs(det) > 1e-12) {
        comp.b0 = (swxx * swy - swx * swxy) / det;
        comp.b1 = (sw * swxy - swx * swy) / det;
      } else {
        comp.b0 = swy / sw;
        comp.b1 = 0.0;
      }
    }

    // M-step, shared variance: weighted moment matching of squared residuals
    {
      double sw = 0, swx = 0, swr = 0, swxx = 0, swxr = 0;
      for (std::size_t t = 0; t < wet.size(); ++t) {
        const auto& c = *wet[t];
        for (std::size_t i = 0; i < c.x.size(); ++i) {
          double z = wet_resp[t][i];
          const auto& comp = candidate.components[c.group[i]];
          double r = cbrt_pos(c.y) - (comp.b0 + comp.b1 * cbrt_pos(c.x[i]));
          double r2 = r * r;
          double x = c.x[i];
          sw += z;
          swx += z * x;
          swr += z * r2;
          swxx += z * x * x;
          swxr += z * x * r2;
        }
      }
      double det = sw * swxx - swx * swx;
      double c1 = std::fabs(det) > 1e-12 ? (sw * swxr - swx * swr) / det : 0.0;
      if (c1 < 0) c1 = 0;  // variance must not shrink with the member value
      double c0 = (swr - c1 * swx) / sw;
      candidate.c1 = c1;
      candidate.c0 = std::max(c0, kVarFloor);
    }

    // The regression/moment-matching updates are not exact M-steps for the
    // Gamma likelihood; backtrack toward the previous parameters whenever
    // they would lower the observed-data log-likelihood.
    const BmaParams full_candidate = candidate;
    double new_ll = log_likelihood(view, candidate);
    double alpha = 1.0;
    while (new_ll < ll_now - 1e-12 && alpha > 1e-4) {
      alpha *= 0.5;
      BmaParams blended = stepped;
      for (std::size_t g = 0; g < k; ++g) {
        blended.components[g].b0 =
            stepped.components[g].b0 +
            alpha * (full_candidate.components[g].b0 - stepped.components[g].b0);
        blended.components[g].b1 =
            stepped.components[g].b1 +
            alpha * (full_candidate.components[g].b1 - stepped.components[g].b1);
      }
      blended.c0 = stepped.c0 + alpha * (full_candidate.c0 - stepped.c0);
      blended.c1 = stepped.c1 + alpha * (full_candidate.c1 - stepped.c1);
      candidate = blended;
      new_ll = log_likelihood(view, candidate);
    }
    if (new_ll < ll_now - 1e-12) {
      // weights-only update; an exact M-step, so it cannot lower the likelihood
      candidate = stepped;
      new_ll = log_likelihood(view, stepped);
    }

    fit.params = candidate;
    fit.loglik_trace.push_back(new_ll);
    fit.iterations = iter + 1;
    double rel = std::fabs(new_ll - ll_now) / (std::fabs(new_ll) + 1e-12);
    if (rel < options.rel_tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

BmaMixture::BmaMixture(std::vector<MixtureComponent> components) : comps_(std::move(components)) {
  if (comps_.empty()) throw Error("BMA mixture needs at least one component");
  double total = 0;
  for (const auto& c : comps_) {
    if (!(c.weight >= 0) || !(c.p0 >= 0 && c.p0 <= 1) || !(c.shape > 0) || !(c.scale > 0))
      throw Error("invalid BMA mixture component");
    total += c.weight;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw Error("BMA mixture weights must sum to 1");
}

double BmaMixture::cdf(double x) const {
  if (x < 0) return 0;
  double acc = 0;
  for (const auto& c : comps_) {
    double wet = x > 0 ? boost::math::cdf(boost::math::gamma_distribution<double>(c.shape, c.scale),
                                          cbrt_pos(x))
                       : 0.0;
    acc += c.weight * (c.p0 + (1.0 - c.p0) * wet);
  }
  return std::min(acc, 1.0);
}

double BmaMixture::pdf(double y) const {
  if (!(y > 0)) return 0;
  double z = cbrt_pos(y);
  double jac = (1.0 / 3.0) * std::pow(y, -2.0 / 3.0);
  double acc = 0;
  for (const auto& c : comps_) {
    acc += c.weight * (1.0 - c.p0) *
           boost::math::pdf(boost::math::gamma_distribution<double>(c.shape, c.scale), z) * jac;
  }
  return acc;
}

double BmaMixture::quantile(double p) const {
  if (!(p > 0 && p < 1)) throw Error("quantile level must be in (0,1)");
  if (p <= prob_zero()) return 0;
  double hi = 1.0;
  while (cdf(hi) < p && hi < 1e9) hi *= 2;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (cdf(mid) >= p ? hi : lo) = mid;
  }
  return hi;
}

double BmaMixture::crps(double y) const {
  if (!(y >= 0)) throw Error("crps requires y >= 0");
  using boost::math::quadrature::gauss_kronrod;
  auto below = [&](double x) {
    double f = cdf(x);
    return f * f;
  };
  auto above = [&](double x) {
    double f = 1.0 - cdf(x);
    return f * f;
  };
  // documented tolerance: 1e-4 mm absolute
  double upper = quantile(1.0 - 1e-9);
  if (upper < y) upper = y;
  double lo = gauss_kronrod<double, 31>::integrate(below, 0.0, y, 12, 1e-6);
  double hi = gauss_kronrod<double, 31>::integrate(above, y, upper, 12, 1e-6);
  return lo + hi;
}

BmaMixture predict_bma(const BmaParams& params, const EnsembleForecast& f) {
  f.validate();
  std::map<std::string, const BmaComponentParams*> lookup;
  std::map<std::string, int> index;
  for (std::size_t g = 0; g < params.components.size(); ++g) {
    lookup[params.components[g].group] = &params.components[g];
    index[params.components[g].group] = int(g);
  }
  std::map<std::string, int> counts;
  for (const auto& m : f.members) ++counts[group_key(m)];

  std::vector<MixtureComponent> comps;
  comps.reserve(f.members.size());
  for (const auto& m : f.members) {
    std::string key = group_key(m);
    auto it = lookup.find(key);
    if (it == lookup.end())
      throw GroupMismatchError("no fitted BMA component for member group '" + key + "'");
    const auto& cp = *it->second;
    MixtureComponent c;
    c.weight = params.weights[index[key]] / double(counts[key]);
    c.p0 = component_pop(cp, m.value);
    double mean = std::max(cp.b0 + cp.b1 * cbrt_pos(m.value), kMeanFloor);
    double var = std::max(params.c0 + params.c1 * m.value, kVarFloor);
    c.shape = mean * mean / var;
    c.scale = var / mean;
    comps.push_back(c);
  }
  return BmaMixture(std::move(comps));
}

EnsembleForecast build_rmm(const std::vector<EnsembleForecast>& sub_ensembles) {
  if (sub_ensembles.empty()) throw RmmInputError("build_rmm: no sub-ensembles");
  EnsembleForecast rmm;
  rmm.site = sub_ensembles.front().site;
  rmm.window = sub_ensembles.front().window;
  rmm.source = "RMM";
  for (const auto& sub : sub_ensembles) {
    sub.validate();
    if (sub.site.id != rmm.site.id || !(sub.window == rmm.window))
      throw RmmInputError("build_rmm: sub-ensembles disagree on site or window");
    double ens_sum = 0;
    std::size_t ens_n = 0;
    const EnsembleMember* cnt = nullptr;
    const EnsembleMember* hres = nullptr;
    for (const auto& m : sub.members) {
      switch (m.tag) {
        case MemberTag::Ens: ens_sum += m.value; ++ens_n; break;
        case MemberTag::Cnt: cnt = &m; break;
        case MemberTag::Hres: hres = &m; break;
        case MemberTag::Mean: break;
      }
    }
    if (ens_n == 0)
      throw RmmInputError("build_rmm: " + sub.source + " supplies no perturbed members");
    if (!cnt) throw RmmInputError("build_rmm: " + sub.source + " supplies no control run");
    rmm.members.push_back({MemberTag::Mean, ens_sum / double(ens_n), sub.source});
    rmm.members.push_back({MemberTag::Cnt, cnt->value, sub.source});
    if (hres) rmm.members.push_back({MemberTag::Hres, hres->value, sub.source});
  }
  rmm.validate();
  return rmm;
}

void save_bma_params(const std::string& path, const BmaParams& params) {
  nlohmann::json j;
  j["model"] = "bma-gamma";
  j["c0"] = params.c0;
  j["c1"] = params.c1;
  auto& comps = j["components"] = nlohmann::json::array();
  for (std::size_t g = 0; g < params.components.size(); ++g) {
    const auto& c = params.components[g];
    comps.push_back({{"group", c.group},
                     {"weight", params.weights[g]},
                     {"a0", c.a0},
                     {"a1", c.a1},
                     {"a2", c.a2},
                     {"b0", c.b0},
                     {"b1", c.b1}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

BmaParams load_bma_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("model", "") != "bma-gamma")
    throw FormatError("'" + path + "' does not hold BMA parameters");
  BmaParams p;
  p.c0 = j.at("c0").get<double>();
  p.c1 = j.at("c1").get<double>();
  for (const auto& c : j.at("components")) {
    BmaComponentParams comp;
    comp.group = c.at("group").get<std::string>();
    comp.a0 = c.at("a0").get<double>();
    comp.a1 = c.at("a1").get<double>();
    comp.a2 = c.at("a2").get<double>();
    comp.b0 = c.at("b0").get<double>();
    comp.b1 = c.at("b1").get<double>();
    p.components.push_back(std::move(comp));
    p.weights.push_back(c.at("weight").get<double>());
  }
  return p;
}

}  // namespace pqpf::bma
