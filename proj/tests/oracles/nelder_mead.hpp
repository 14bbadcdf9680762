#pragma once

// Derivative-free minimiser used as an independent check on IRLS. Plain
// Nelder-Mead with restarts from the best vertex, so it does not share any
// code path with the Newton-type fitter.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
};

inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                                    double step = 0.5, int restarts = 12, int max_iter = 20000, double ftol = 1e-15) {
  const std::size_t n = x0.size();
  NelderMeadResult best{x0, f(x0)};
  for (int restart = 0; restart < restarts; ++restart) {
    std::vector<std::vector<double>> simplex(n + 1, best.x);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
    for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);
    for (int iter = 0; iter < max_iter; ++iter) {
      std::vector<std::size_t> order(n + 1);
      for (std::size_t i = 0; i <= n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
      const auto lo = order.front(), hi = order.back(), second = order[n - 1];
      if (std::abs(values[hi] - values[lo]) <= ftol * (std::abs(values[lo]) + 1e-30)) break;
      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i <= n; ++i) {
        if (i == hi) continue;
        for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
      }
      auto along = [&](double t) {
        std::vector<double> p(n);
        for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + t * (simplex[hi][j] - centroid[j]);
        return p;
      };
      auto reflected = along(-1.0);
      const double fr = f(reflected);
      if (fr < values[lo]) {
        auto expanded = along(-2.0);
        const double fe = f(expanded);
        if (fe < fr) {
          simplex[hi] = expanded, values[hi] = fe;
        } else {
          simplex[hi] = reflected, values[hi] = fr;
        }
      } else if (fr < values[second]) {
        simplex[hi] = reflected, values[hi] = fr;
      } else {
        auto contracted = fr < values[hi] ? along(-0.5) : along(0.5);
        const double fc = f(contracted);
        if (fc < std::min(fr, values[hi])) {
          simplex[hi] = contracted, values[hi] = fc;
        } else {
          for (std::size_t i = 0; i <= n; ++i) {
            if (i == lo) continue;
            for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
            values[i] = f(simplex[i]);
          }
        }
      }
    }
    const auto it = std::min_element(values.begin(), values.end());
    const auto idx = static_cast<std::size_t>(it - values.begin());
    if (values[idx] < best.value) best = {simplex[idx], values[idx]};
    step *= 0.3;
  }
  return best;
}

}  // namespace oracle
