#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "oracles/markov_monitoring.hpp"
#include "rcds/errors.hpp"
#include "rcds/run_config.hpp"
#include "rcds/simulator.hpp"

using namespace rcds;

namespace {

double mean_d(const Cohort& c) {
  double s = 0.0;
  for (const auto& r : c.subjects) s += r.d_total;
  return s / static_cast<double>(c.size());
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("cohort size and parameter validation") {
    DgpParams p;
    CHECK_THROWS_AS(simulate_cohort(p, 0), ConfigError);
    DgpParams bad = p;
    bad.resuppress_prob = 1.0;
    CHECK_THROWS_AS(simulate_cohort(bad, 5), ConfigError);
    bad = p;
    bad.override_hazard = 0.0;
    CHECK_THROWS_AS(simulate_cohort(bad, 5), ConfigError);
  }

  TEST_CASE("no dropout means follow-up to the horizon") {
    DgpParams p;
    p.dropout_hazard = 0.0;
    auto c = simulate_cohort(p, 1);
    REQUIRE(c.size() == 1);
    CHECK(c.subjects[0].followup_end == p.horizon);
    CHECK(c.subjects[0].outcome_y.has_value());
    CHECK(check_record(c.subjects[0], p.horizon, c.schema.names.size()).empty());
  }

  TEST_CASE("saturated monitoring visits every month") {
    DgpParams p;
    p.dropout_hazard = 0.0;
    p.obs_monitor.intercept = 10.0;
    p.obs_monitor.last_marker = 0.0;
    for (const auto& r : simulate_cohort(p, 20).subjects) CHECK(r.d_total == p.horizon + 1);
  }

  TEST_CASE("records satisfy the cohort invariants") {
    DgpParams p;
    auto c = simulate_cohort(p, 500);
    for (const auto& r : c.subjects) {
      CHECK(check_record(r, c.horizon, c.schema.names.size()).empty());
      auto copy = r;
      derive_history(copy);
      CHECK(copy == r);
    }
  }

  TEST_CASE("monthly monitoring frequency matches the coarsened chain") {
    DgpParams p;
    const auto marginal = oracle::monitoring_marginals(p);
    auto c = simulate_cohort(p, 10000);
    std::vector<double> hits(static_cast<std::size_t>(p.horizon) + 1, 0.0), at(hits.size(), 0.0);
    for (const auto& r : c.subjects) {
      for (const auto& row : r.rows) {
        at[static_cast<std::size_t>(row.t)] += 1.0;
        hits[static_cast<std::size_t>(row.t)] += row.monitor ? 1.0 : 0.0;
      }
    }
    double overall_emp = 0.0, overall_true = 0.0, total = 0.0;
    for (std::size_t t = 0; t < hits.size(); ++t) {
      CHECK(std::abs(hits[t] / at[t] - marginal[t]) < 0.02);
      overall_emp += hits[t];
      overall_true += marginal[t] * at[t];
      total += at[t];
    }
    CHECK(std::abs(overall_emp - overall_true) / total < 0.02);
  }

  TEST_CASE("deterministic under a fixed seed") {
    DgpParams p;
    CHECK(simulate_cohort(p, 300) == simulate_cohort(p, 300));
    DgpParams q = p;
    q.seed = p.seed + 1;
    CHECK_FALSE(simulate_cohort(p, 300) == simulate_cohort(q, 300));
  }

  TEST_CASE("monitoring never reads the latent state") {
    DgpParams p;
    DgpParams q = p;
    q.failure_hazard.intercept = -2.0;
    q.failure_hazard.latent_marker = 1.5;
    q.resuppress_prob = 0.1;
    auto a = simulate_cohort(p, 1000);
    auto b = simulate_cohort(q, 1000);
    int outcomes_differ = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a.subjects[i].rows.size() == b.subjects[i].rows.size());
      for (std::size_t t = 0; t < a.subjects[i].rows.size(); ++t) {
        CHECK(a.subjects[i].rows[t] == b.subjects[i].rows[t]);
      }
      outcomes_differ += a.subjects[i].outcome_y != b.subjects[i].outcome_y;
    }
    CHECK(outcomes_differ > 0);
  }

  TEST_CASE("positivity audit over coarsened history cells") {
    DgpParams p;
    auto c = simulate_cohort(p, 10000);
    std::map<std::tuple<int, int, int>, std::pair<int, int>> cells;
    for (const auto& r : c.subjects) {
      for (int t = 0; t <= r.followup_end; ++t) {
        const auto h = history_before(r, t);
        const int band = static_cast<int>(std::floor(*h.last_observed_marker / 100.0));
        auto& cell = cells[{std::clamp(band, 0, 8), std::min(h.months_since_last_monitor, 12), h.override_flag}];
        cell.first += 1;
        cell.second += r.rows[static_cast<std::size_t>(t)].monitor;
      }
    }
    int audited = 0;
    for (const auto& [key, cell] : cells) {
      if (cell.first < 50) continue;
      ++audited;
      const double f = static_cast<double>(cell.second) / cell.first;
      CHECK(f > 0.01);
      CHECK(f < 0.99);
    }
    CHECK(audited > 20);
  }

  TEST_CASE("forced earliest-month monitoring") {
    DgpParams p;
    ThresholdStrategy s{500.0};
    auto c = simulate_forced(p, s, 2000);
    for (const auto& r : c.subjects) {
      CHECK(consistency_horizon(s, r, c.horizon) == c.horizon + 1);
      for (int t = 0; t <= r.followup_end; ++t) {
        const auto h = history_before(r, t);
        const Window w = applicable_window(s, h);
        CHECK(r.rows[static_cast<std::size_t>(t)].monitor == (h.months_since_last_monitor + 1 >= w.lo));
        if (r.rows[static_cast<std::size_t>(t)].monitor && *h.last_observed_marker < s.x && !h.override_flag) {
          CHECK(h.months_since_last_monitor + 1 == 2);
        }
      }
    }
  }

  TEST_CASE("within-window forced cohorts are consistent") {
    DgpParams p;
    ThresholdStrategy s{350.0};
    auto fc = simulate_forced_weighted(p, s, 2000, WithinWindowRandom{{0.3}}, true);
    for (std::size_t i = 0; i < fc.cohort.size(); ++i) {
      CHECK(consistency_horizon(s, fc.cohort.subjects[i], p.horizon) == p.horizon + 1);
      CHECK(fc.path_weight[i] > 0.0);
      CHECK(fc.path_weight[i] <= 1.0);
    }
  }

  TEST_CASE("higher thresholds use more monitoring") {
    DgpParams p;
    const double hi = mean_d(simulate_forced(p, ThresholdStrategy{500.0}, 10000));
    const double lo = mean_d(simulate_forced(p, ThresholdStrategy{200.0}, 10000));
    CHECK(hi >= lo);
  }

  TEST_CASE("oracle: no monitoring effect gives a flat risk curve") {
    DgpParams p;
    p.failure_hazard.months_since_monitor = 0.0;
    auto truth = oracle_truth(p, StrategyGrid::linear(200, 500, 50), 4000);
    for (const auto& row : truth.rows) {
      CHECK(std::abs(row.risk - truth.rows.front().risk) <= 2.0 * std::max(row.risk_mcse, 1e-12));
    }
  }

  TEST_CASE("oracle: equal windows give a flat usage curve") {
    DgpParams p;
    auto grid = StrategyGrid::linear(200, 500, 50, {2, 7}, {2, 7});
    auto truth = oracle_truth(p, grid, 4000);
    for (const auto& row : truth.rows) {
      CHECK(std::abs(row.usage - truth.rows.front().usage) <= 2.0 * std::max(row.usage_mcse, 1e-12));
    }
  }

  TEST_CASE("oracle is reproducible and sane") {
    DgpParams p;
    auto grid = StrategyGrid::linear(200, 500, 100);
    auto a = oracle_truth(p, grid, 3000);
    auto b = oracle_truth(p, grid, 3000);
    REQUIRE(a.rows.size() == 4);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].risk == b.rows[i].risk);
      CHECK(a.rows[i].usage == b.rows[i].usage);
      CHECK(a.rows[i].risk_mcse == b.rows[i].risk_mcse);
      CHECK(a.rows[i].risk > 0.0);
      CHECK(a.rows[i].risk < 1.0);
      CHECK(a.rows[i].risk_mcse > 0.0);
    }
    CHECK_THROWS_AS(oracle_truth(p, grid, 999), ConfigError);
  }

  TEST_CASE("DGP parameters round trip through JSON") {
    DgpParams p;
    p.seed = 99;
    p.failure_hazard.intercept = -5.5;
    p.obs_monitor.override_flag = 0.75;
    p.horizon = 18;
    auto q = dgp_from_json(dgp_to_json(p));
    CHECK(dgp_to_json(q) == dgp_to_json(p));
    CHECK(q.seed == 99);
    CHECK(q.horizon == 18);
    CHECK(q.failure_hazard.intercept == -5.5);
  }
}
