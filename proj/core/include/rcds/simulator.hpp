#pragma once

// Synthetic longitudinal cohorts with a known monitoring mechanism, plus a
// forced-strategy Monte Carlo oracle for the counterfactual risk and usage
// curves.
//
// Each month t = 0..horizon:
//   1. the latent marker follows an AR(1) step (t > 0);
//   2. a latent override event may switch on (absorbing);
//   3. a monitoring decision is made from observed history only;
//   4. a failure event may occur (absorbing), with logit hazard driven by the
//      months since the last effective check and the latent marker;
//   5. a monitoring visit records the marker and override status, and with
//      probability resuppress_prob resets the failure-risk clock;
//   6. the subject may be lost to follow-up (t < horizon).

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "rcds/core_model.hpp"

namespace rcds {

struct DgpParams {
  int horizon = kDefaultHorizon;

  struct MarkerInit {
    double mean = 380.0;
    double sd = 120.0;
  } marker_init;

  // marker_t = intercept + slope * marker_{t-1} + N(0, noise_sd)
  struct MarkerDrift {
    double intercept = 12.0;
    double slope = 0.97;
    double noise_sd = 20.0;
  } marker_drift;

  // Marker terms enter the logits as (marker - marker_center) / marker_scale.
  double marker_center = 350.0;
  double marker_scale = 100.0;

  struct FailureHazard {
    double intercept = -6.0;
    double months_since_monitor = 0.15;
    double latent_marker = -0.3;
    double age_per_decade = 0.1;
  } failure_hazard;

  double resuppress_prob = 0.8;

  struct MonitorModel {
    double intercept = -2.4;
    double last_marker = -0.3;
    double months_since_monitor = 0.05;
    double override_flag = 1.0;
  } obs_monitor;

  double override_hazard = 0.01;
  double dropout_hazard = 0.004;
  std::uint64_t seed = 20201016;

  void validate() const;
};

// Observed history available to the monitoring decision at month t. The latent
// marker and failure state are deliberately absent.
struct ObservedState {
  int t = 0;
  double last_marker = 0.0;
  int months_since_monitor = 0;
  bool override_flag = false;
};

double observational_monitor_probability(const DgpParams& params, const ObservedState& state);

// Monitor at the first month the applicable window permits (gap == lo).
struct EarliestMonth {};

// Within the window, monitor with probability monitor_prob[t] (the last entry
// is reused past its end); outside it take the only consistent action. Paths
// carry the likelihood ratio of the forced actions, so weighted means target
// the monitoring regime monitor_prob[t] restricted to strategy-consistent
// histories.
struct WithinWindowRandom {
  std::vector<double> monitor_prob;
};

using ForcedRule = std::variant<EarliestMonth, WithinWindowRandom>;

struct ForcedCohort {
  Cohort cohort;
  std::vector<double> path_weight;  // 1 for EarliestMonth
};

CovariateSchema simulator_schema();

Cohort simulate_cohort(const DgpParams& params, std::size_t n);

Cohort simulate_forced(const DgpParams& params, const ThresholdStrategy& strategy, std::size_t n,
                       const ForcedRule& rule = EarliestMonth{});

// Like simulate_forced but returns path weights; with_dropout = false runs
// every subject to the horizon.
ForcedCohort simulate_forced_weighted(const DgpParams& params, const ThresholdStrategy& strategy,
                                      std::size_t n, const ForcedRule& rule, bool with_dropout);

struct OracleRow {
  double x = 0.0;
  double risk = 0.0;
  double risk_mcse = 0.0;
  double usage = 0.0;
  double usage_mcse = 0.0;
};

struct OracleTable {
  std::vector<OracleRow> rows;
};

// Counterfactual E[Y(g_x)] and E[D(g_x)] by forced simulation without loss to
// follow-up. Subject j uses the same random streams under every x.
OracleTable oracle_truth(const DgpParams& params, const StrategyGrid& grid, std::size_t n_mc,
                         const ForcedRule& rule = EarliestMonth{});

}  // namespace rcds
