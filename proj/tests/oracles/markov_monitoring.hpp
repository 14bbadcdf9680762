#pragma once

// Forward probabilities of the observational monitoring process on a coarsened
// state space: latent marker bin, last observed marker bin, months since the
// last visit, and the (latent, observed) override pair. Computed directly from
// the DGP description without running the simulator.

#include <algorithm>
#include <cmath>
#include <vector>

#include "rcds/simulator.hpp"

namespace oracle {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Marginal P(N_t = 1) for t = 0..horizon.
inline std::vector<double> monitoring_marginals(const rcds::DgpParams& p, double bin = 20.0, double top = 1000.0) {
  const int nb = static_cast<int>(top / bin);
  const int ng = p.horizon + 2;
  auto center = [&](int b) { return (b + 0.5) * bin; };

  // mass of a normal over the bins (ends absorb the tails)
  auto spread = [&](double mean, double sd) {
    std::vector<double> out(static_cast<std::size_t>(nb), 0.0);
    for (int b = 0; b < nb; ++b) {
      const double lo = b == 0 ? -1e300 : b * bin;
      const double hi = b == nb - 1 ? 1e300 : (b + 1) * bin;
      out[static_cast<std::size_t>(b)] = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
    }
    return out;
  };
  std::vector<std::vector<double>> step(static_cast<std::size_t>(nb));
  for (int b = 0; b < nb; ++b) {
    step[static_cast<std::size_t>(b)] =
        spread(p.marker_drift.intercept + p.marker_drift.slope * center(b), p.marker_drift.noise_sd);
  }

  // index: ((m * nb + l) * ng + g) * 3 + ov; ov 0 = (off, off), 1 = (on, unseen), 2 = (on, seen)
  const std::size_t size = static_cast<std::size_t>(nb) * nb * ng * 3;
  auto idx = [&](int m, int l, int g, int ov) {
    return ((static_cast<std::size_t>(m) * nb + l) * ng + g) * 3 + ov;
  };
  std::vector<double> mass(size, 0.0);
  const auto init = spread(p.marker_init.mean, p.marker_init.sd);
  for (int b = 0; b < nb; ++b) mass[idx(b, b, 0, 0)] = init[static_cast<std::size_t>(b)];

  std::vector<double> out;
  for (int t = 0; t <= p.horizon; ++t) {
    if (t > 0) {
      std::vector<double> moved(size, 0.0);
      for (int m = 0; m < nb; ++m) {
        const auto& row = step[static_cast<std::size_t>(m)];
        for (int l = 0; l < nb; ++l) {
          for (int g = 0; g < ng; ++g) {
            for (int ov = 0; ov < 3; ++ov) {
              const double w = mass[idx(m, l, g, ov)];
              if (w == 0.0) continue;
              for (int m2 = 0; m2 < nb; ++m2) moved[idx(m2, l, g, ov)] += w * row[static_cast<std::size_t>(m2)];
            }
          }
        }
      }
      mass.swap(moved);
    }
    std::vector<double> next(size, 0.0);
    double freq = 0.0;
    for (int m = 0; m < nb; ++m) {
      for (int l = 0; l < nb; ++l) {
        for (int g = 0; g < ng; ++g) {
          const double off = mass[idx(m, l, g, 0)];
          const double states[3] = {off * (1.0 - p.override_hazard), mass[idx(m, l, g, 1)] + off * p.override_hazard,
                                    mass[idx(m, l, g, 2)]};
          for (int ov = 0; ov < 3; ++ov) {
            const double w = states[ov];
            if (w == 0.0) continue;
            const double z = p.obs_monitor.intercept +
                             p.obs_monitor.last_marker * (center(l) - p.marker_center) / p.marker_scale +
                             p.obs_monitor.months_since_monitor * g + p.obs_monitor.override_flag * (ov == 2 ? 1.0 : 0.0);
            const double q = 1.0 / (1.0 + std::exp(-z));
            freq += w * q;
            next[idx(m, m, 0, ov == 0 ? 0 : 2)] += w * q;
            next[idx(m, l, std::min(g + 1, ng - 1), ov)] += w * (1.0 - q);
          }
        }
      }
    }
    mass.swap(next);
    out.push_back(freq);
  }
  return out;
}

}  // namespace oracle
