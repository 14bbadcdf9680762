#include <doctest.h>

#include <memory>

#include "helpers.hpp"
#include "rcds/errors.hpp"
#include "rcds/expansion.hpp"
#include "rcds/simulator.hpp"

using namespace rcds;
using testing::make_record;

TEST_SUITE("expansion") {
  TEST_CASE("a subject below every threshold follows all strategies") {
    auto c = std::make_shared<Cohort>();
    std::map<int, double> visits;
    for (int t = 2; t <= 24; t += 3) visits[t] = 100;
    auto rec = make_record("low", 100, visits, 24);
    rec.outcome_y = 0;
    c->subjects.push_back(rec);
    auto ds = expand(c, StrategyGrid::default_grid());
    CHECK(ds.clones().size() == 31);
    CHECK(ds.strategies_followed(0) == 31);
    CHECK(horizon_responses(ds).size() == 31);
    CHECK(ds.row_count() == 31u * 25u);
  }

  TEST_CASE("fixture censoring months match consistency_horizon") {
    auto c = std::make_shared<Cohort>(testing::three_subjects());
    auto grid = StrategyGrid::linear(300, 600, 50);
    auto ds = expand(c, grid);
    REQUIRE(ds.clones().size() == 3 * grid.size());
    for (const auto& clone : ds.clones()) {
      const auto& rec = c->subjects[clone.subject];
      const int m = consistency_horizon(grid.strategies[clone.strategy], rec, c->horizon);
      CHECK(clone.deviation == m);
      const auto rows = ds.clone_rows(clone);
      bool was_at_risk = true;
      for (const auto& r : rows) {
        CHECK(r.censored_this_month == (r.t == m && m <= rec.followup_end));
        CHECK((was_at_risk || !r.at_risk));
        was_at_risk = r.at_risk;
      }
      CHECK(rows.back().t == std::min(m, rec.followup_end));
    }
    // A01 under 300 (censored at 2), B02 under 300 (lost at 3, uncensored)
    CHECK(ds.clones()[0].censored);
    CHECK(ds.clones()[0].last_t == 2);
    CHECK_FALSE(ds.clones()[grid.size()].censored);
    CHECK(ds.clones()[grid.size()].last_t == 3);
  }

  TEST_CASE("empty grid gives an empty dataset") {
    auto c = std::make_shared<Cohort>(testing::three_subjects());
    auto ds = expand(c, StrategyGrid{});
    CHECK(ds.clones().empty());
    CHECK(ds.row_count() == 0);
    CHECK(horizon_responses(ds).empty());
  }

  TEST_CASE("horizon responses skip censored clones and count visits") {
    auto c = std::make_shared<Cohort>();
    c->horizon = 24;
    // five visits, all in the below window for x = 500 (marker 300)
    auto rec = make_record("five", 300, {{2, 300}, {6, 300}, {10, 300}, {14, 300}, {20, 300}}, 24);
    rec.outcome_y = 1;
    c->subjects.push_back(rec);
    auto grid = StrategyGrid::linear(200, 500, 300);  // 200 censors at month 2, 500 follows
    auto ds = expand(c, grid);
    auto responses = horizon_responses(ds);
    REQUIRE(responses.size() == 1);
    CHECK(responses[0].x == 500);
    CHECK(responses[0].d == 5);
    CHECK(responses[0].y == 1);
    CHECK(ds.clones()[0].censored);
    CHECK(ds.clones()[0].last_t == 2);
    const auto last = ds.clone_rows(ds.clones()[1]).back();
    CHECK(last.response_d == 5);
    CHECK(last.response_y == 1);
  }

  TEST_CASE("forced cohort keeps every clone of its strategy") {
    DgpParams p;
    auto grid = StrategyGrid::default_grid();
    const auto s = grid.strategies[12];
    auto c = std::make_shared<Cohort>(simulate_forced(p, s, 300));
    auto ds = expand(c, grid);
    for (const auto& clone : ds.clones()) {
      if (clone.strategy == 12) CHECK_FALSE(clone.censored);
    }
  }

  TEST_CASE("single-strategy expansion matches the full expansion") {
    DgpParams p;
    auto c = std::make_shared<Cohort>(simulate_cohort(p, 400));
    auto grid = StrategyGrid::default_grid();
    auto full = expand(c, grid);
    for (std::size_t s : {0u, 15u, 30u}) {
      StrategyGrid one{{grid.strategies[s]}};
      auto single = expand(c, one);
      for (std::size_t i = 0; i < c->size(); ++i) {
        const auto& a = full.clones()[i * grid.size() + s];
        const auto& b = single.clones()[i];
        CHECK(a.deviation == b.deviation);
        CHECK(a.last_t == b.last_t);
        CHECK(a.censored == b.censored);
      }
    }
  }

  TEST_CASE("nesting across thresholds the marker path never enters") {
    DgpParams p;
    auto c = std::make_shared<Cohort>(simulate_cohort(p, 1000));
    auto grid = StrategyGrid::default_grid();
    auto ds = expand(c, grid);
    int checked = 0;
    for (std::size_t i = 0; i < c->size(); ++i) {
      const auto& rec = c->subjects[i];
      for (std::size_t s = 0; s < grid.size(); ++s) {
        if (!ds.clones()[i * grid.size() + s].reaches_horizon(c->horizon)) continue;
        for (std::size_t s2 = 0; s2 < grid.size(); ++s2) {
          const double lo = std::min(grid.strategies[s].x, grid.strategies[s2].x);
          const double hi = std::max(grid.strategies[s].x, grid.strategies[s2].x);
          bool enters = false;
          for (int t = 0; t <= rec.followup_end && !enters; ++t) {
            const double m = *history_before(rec, t).last_observed_marker;
            enters = m >= lo && m < hi;
          }
          if (enters) continue;
          ++checked;
          CHECK(ds.clones()[i * grid.size() + s2].reaches_horizon(c->horizon));
        }
      }
    }
    CHECK(checked > 0);
  }

  TEST_CASE("expansion is deterministic") {
    DgpParams p;
    auto c = std::make_shared<Cohort>(simulate_cohort(p, 200));
    auto a = expand(c, StrategyGrid::default_grid()).columns();
    auto b = expand(c, StrategyGrid::default_grid()).columns();
    CHECK(a.t == b.t);
    CHECK(a.x == b.x);
    CHECK(a.subject == b.subject);
    CHECK(a.at_risk == b.at_risk);
    CHECK(a.censored_this_month == b.censored_this_month);
    CHECK(a.response_y == b.response_y);
    CHECK(a.response_d == b.response_d);
  }

  TEST_CASE("empty cohort is rejected") {
    CHECK_THROWS_AS(expand(std::make_shared<Cohort>(), StrategyGrid::default_grid()), ConfigError);
  }
}
