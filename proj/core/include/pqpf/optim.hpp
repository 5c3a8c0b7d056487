#pragma once

#include <functional>
#include <vector>

namespace pqpf {

struct NelderMeadOptions {
  int max_iterations = 200;
  double rel_tol = 1e-6;  // relative spread of simplex objective values
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> best_trace;  // best objective after each iteration, non-increasing
};

// Derivative-free simplex minimization (reflection/expansion/contraction/
// shrink with the standard coefficients).  `steps` sets the initial simplex
// edge per coordinate; zero entries fall back to a small absolute step.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, std::vector<double> steps,
                             const NelderMeadOptions& options = {});

}  // namespace pqpf
