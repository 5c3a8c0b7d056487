#include "pqpf/optim.hpp"

#include <algorithm>
#include <cmath>

#include "pqpf/errors.hpp"

namespace pqpf {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, std::vector<double> steps,
                             const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw Error("nelder_mead: empty parameter vector");
  if (steps.size() != n) throw Error("nelder_mead: steps size mismatch");

  struct Vertex {
    std::vector<double> x;
    double fx;
  };
  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  simplex.push_back({x0, f(x0)});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = x0;
    double h = steps[i] != 0.0 ? steps[i] : 0.05;
    x[i] += h;
    simplex.push_back({x, f(x)});
  }

  auto by_value = [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; };
  std::sort(simplex.begin(), simplex.end(), by_value);

  NelderMeadResult result;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Vertex& best = simplex.front();
    const Vertex& worst = simplex.back();
    double spread = std::fabs(worst.fx - best.fx);
    if (spread <= options.rel_tol * (std::fabs(best.fx) + 1e-12)) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t v = 0; v + 1 < simplex.size(); ++v) centroid[i] += simplex[v].x[i];
      centroid[i] /= double(n);
    }

    auto point_at = [&](double coef) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + coef * (worst.x[i] - centroid[i]);
      return x;
    };

    Vertex reflected{point_at(-1.0), 0.0};
    reflected.fx = f(reflected.x);

    if (reflected.fx < best.fx) {
      Vertex expanded{point_at(-2.0), 0.0};
      expanded.fx = f(expanded.x);
      simplex.back() = expanded.fx < reflected.fx ? std::move(expanded) : std::move(reflected);
    } else if (reflected.fx < simplex[simplex.size() - 2].fx) {
      simplex.back() = std::move(reflected);
    } else {
      bool outside = reflected.fx < worst.fx;
      Vertex contracted{point_at(outside ? -0.5 : 0.5), 0.0};
      contracted.fx = f(contracted.x);
      if (contracted.fx < std::min(reflected.fx, worst.fx)) {
        simplex.back() = std::move(contracted);
      } else {
        // shrink toward the best vertex
        for (std::size_t v = 1; v < simplex.size(); ++v) {
          for (std::size_t i = 0; i < n; ++i)
            simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
          simplex[v].fx = f(simplex[v].x);
        }
      }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    result.best_trace.push_back(simplex.front().fx);
  }

  result.x = simplex.front().x;
  result.fx = simplex.front().fx;
  result.iterations = iter;
  return result;
}

}  // namespace pqpf
