#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pqpf/gev.hpp"
#include "pqpf/types.hpp"

namespace pqpf::emos {

struct EmosPredictors {
  std::optional<double> hres;
  std::optional<double> cnt;
  double ens_mean = 0;   // mean of the perturbed (ENS) members
  double frac_zero = 0;  // share of all members below the PoP threshold
  double mean_diff = 0;  // mean absolute pairwise difference over all members
  bool single_member = false;
};

// ens_mean over ENS-tagged members (all members when none is tagged ENS),
// frac_zero and mean_diff over all members.  A single-member ensemble gets
// mean_diff 0 with the warning flag set.
EmosPredictors compute_predictors(const EnsembleForecast& f);

struct EmosParams {
  double a0 = 0;                 // location intercept
  std::optional<double> a1;      // hres coefficient, when the EPS supplies one
  std::optional<double> a2;      // cnt coefficient
  double a3 = 1;                 // ens_mean coefficient
  double a4 = 0;                 // frac_zero coefficient
  double b0 = 1;                 // scale intercept
  double b1 = 0;                 // mean_diff coefficient
  double xi = 0.1;               // shape, in (kXiMin, kXiMax)

  double location(const EmosPredictors& p) const;
  double scale(const EmosPredictors& p) const { return b0 + b1 * p.mean_diff; }
};

inline constexpr double kSigmaFloorMm = 0.01;

struct EmosTrainingPair {
  EmosPredictors predictors;
  double obs_mm = 0;
};

struct EmosFit {
  EmosParams params;
  bool converged = true;
  int iterations = 0;
  double train_crps = 0;    // mean CRPS at the optimum
  double initial_crps = 0;  // mean CRPS of the best starting vector
  std::vector<double> trace;
};

struct EmosFitOptions {
  // a simplex over up to 8 coefficients needs a few hundred steps to collapse
  int max_iterations = 1000;
  double rel_tol = 1e-6;
  std::size_t min_training_pairs = 30;
};

// CRPS minimization with multi-start local search (climatological start,
// ensemble-regression start and, when given, the previous window's optimum).
EmosFit fit_emos(const std::vector<EmosTrainingPair>& training,
                 const EmosParams* warm_start = nullptr, const EmosFitOptions& options = {});

// mu = a0 + a1 hres + a2 cnt + a3 ens_mean + a4 frac_zero,
// sigma = b0 + b1 mean_diff floored at kSigmaFloorMm.
CensoredGev predict_emos(const EmosParams& params, const EmosPredictors& predictors,
                         bool* sigma_floored = nullptr);

void save_emos_params(const std::string& path, const EmosParams& params);
EmosParams load_emos_params(const std::string& path);

}  // namespace pqpf::emos
