#include "rcds/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "rcds/errors.hpp"
#include "rcds/parallel.hpp"
#include "rcds/random.hpp"

namespace rcds {

namespace {

// Random stream identifiers; each process draws from its own stream so that
// changing one mechanism leaves the others' draws untouched.
enum Stream : std::uint64_t {
  kBaselineStream = 1,
  kMarkerStream,
  kOverrideStream,
  kMonitorStream,
  kFailureStream,
  kResuppressStream,
  kDropoutStream,
};

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_probability(double p, std::string_view name) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError(fmt::format("{} must lie in (0, 1), got {}", name, p));
}

int marker_band(double marker) {
  if (marker < 200.0) return 0;
  if (marker < 350.0) return 1;
  if (marker < 500.0) return 2;
  return 3;
}

enum class PolicyKind { observational, earliest, within_window };

struct Policy {
  PolicyKind kind = PolicyKind::observational;
  const ThresholdStrategy* strategy = nullptr;
  const std::vector<double>* monitor_prob = nullptr;
};

struct SimulatedSubject {
  SubjectRecord record;
  double path_weight = 1.0;
};

SimulatedSubject simulate_subject(const DgpParams& p, const Policy& policy, std::size_t index,
                                  bool with_dropout) {
  const auto seed_for = [&](Stream s) { return derive_seed(p.seed, s, index); };
  Rng baseline_rng(seed_for(kBaselineStream));
  Rng marker_rng(seed_for(kMarkerStream));
  Rng override_rng(seed_for(kOverrideStream));
  Rng monitor_rng(seed_for(kMonitorStream));
  Rng failure_rng(seed_for(kFailureStream));
  Rng resuppress_rng(seed_for(kResuppressStream));
  Rng dropout_rng(seed_for(kDropoutStream));
  std::normal_distribution<double> normal(0.0, 1.0);

  SimulatedSubject out;
  SubjectRecord& rec = out.record;
  rec.subject_id = fmt::format("S{:06d}", index + 1);

  const double sex = baseline_rng.uniform() < 0.35 ? 1.0 : 0.0;
  double marker = std::max(10.0, p.marker_init.mean + p.marker_init.sd * normal(baseline_rng));
  marker = std::round(marker);
  const double age = std::round(std::clamp(40.0 + 10.0 * normal(baseline_rng), 18.0, 80.0));
  const double calendar = std::floor(baseline_rng.uniform() * 16.0);
  rec.baseline.values = {sex, static_cast<double>(marker_band(marker)), age, calendar};
  rec.baseline_marker = marker;
  rec.rows.reserve(static_cast<std::size_t>(p.horizon) + 1);

  const double age_term = p.failure_hazard.age_per_decade * (age - 40.0) / 10.0;
  bool override_latent = false;
  bool failed = false;
  int clock = 0;
  int count = 0;
  rec.followup_end = p.horizon;

  for (int t = 0; t <= p.horizon; ++t) {
    if (t > 0) {
      marker = p.marker_drift.intercept + p.marker_drift.slope * marker + p.marker_drift.noise_sd * normal(marker_rng);
      marker = std::max(1.0, marker);
    }
    if (override_rng.uniform() < p.override_hazard) override_latent = true;

    const TimeRow before = history_before(rec, t);
    const int gap = before.months_since_last_monitor + 1;
    const double u_monitor = monitor_rng.uniform();
    bool monitor = false;
    switch (policy.kind) {
      case PolicyKind::observational: {
        const ObservedState state{t, *before.last_observed_marker, before.months_since_last_monitor,
                                  before.override_flag};
        monitor = u_monitor < observational_monitor_probability(p, state);
        break;
      }
      case PolicyKind::earliest: {
        monitor = gap >= applicable_window(*policy.strategy, before).lo;
        break;
      }
      case PolicyKind::within_window: {
        const Window w = applicable_window(*policy.strategy, before);
        const auto& probs = *policy.monitor_prob;
        const double q = probs[std::min(static_cast<std::size_t>(t), probs.size() - 1)];
        const bool may_monitor = gap >= w.lo && gap <= w.hi;
        const bool may_skip = gap < w.hi || t == p.horizon;
        if (may_monitor && may_skip) {
          monitor = u_monitor < q;
        } else {
          monitor = may_monitor;
          out.path_weight *= monitor ? q : 1.0 - q;
        }
        break;
      }
    }

    const double hazard = logistic(p.failure_hazard.intercept + p.failure_hazard.months_since_monitor * clock +
                                   p.failure_hazard.latent_marker * (marker - p.marker_center) / p.marker_scale +
                                   age_term);
    if (failure_rng.uniform() < hazard) failed = true;

    const bool resuppress = resuppress_rng.uniform() < p.resuppress_prob;
    TimeRow row;
    row.t = t;
    row.monitor = monitor;
    if (monitor) {
      ++count;
      row.observed_marker = std::round(marker);
      row.last_observed_marker = row.observed_marker;
      row.months_since_last_monitor = 0;
      row.override_flag = override_latent;
      clock = resuppress ? 0 : clock + 1;
    } else {
      row.last_observed_marker = before.last_observed_marker;
      row.months_since_last_monitor = before.months_since_last_monitor + 1;
      row.override_flag = before.override_flag;
      ++clock;
    }
    rec.rows.push_back(row);

    const bool lost = dropout_rng.uniform() < p.dropout_hazard;
    if (with_dropout && t < p.horizon && lost) {
      rec.followup_end = t;
      rec.end_reason = EndReason::lost;
      break;
    }
  }
  rec.d_total = count;
  if (rec.followup_end == p.horizon) {
    rec.outcome_y = failed ? 1 : 0;
    rec.end_reason = EndReason::administrative_end;
  }
  return out;
}

ForcedCohort run_policy(const DgpParams& params, const Policy& policy, std::size_t n, bool with_dropout) {
  params.validate();
  if (n < 1) throw ConfigError("cohort size must be at least 1");
  ForcedCohort out;
  out.cohort.horizon = params.horizon;
  out.cohort.schema = simulator_schema();
  out.cohort.subjects.resize(n);
  out.path_weight.assign(n, 1.0);
  parallel_for(n, [&](std::size_t i) {
    auto sim = simulate_subject(params, policy, i, with_dropout);
    out.cohort.subjects[i] = std::move(sim.record);
    out.path_weight[i] = sim.path_weight;
  });
  return out;
}

Policy forced_policy(const ThresholdStrategy& strategy, const ForcedRule& rule) {
  strategy.validate();
  Policy policy;
  policy.strategy = &strategy;
  if (const auto* random = std::get_if<WithinWindowRandom>(&rule)) {
    if (random->monitor_prob.empty()) throw ConfigError("within-window rule needs monitoring probabilities");
    for (double q : random->monitor_prob) require_probability(q, "within-window monitoring probability");
    policy.kind = PolicyKind::within_window;
    policy.monitor_prob = &random->monitor_prob;
  } else {
    policy.kind = PolicyKind::earliest;
  }
  return policy;
}

}  // namespace

void DgpParams::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be at least 1 month");
  if (!(marker_init.sd > 0.0)) throw ConfigError("marker_init.sd must be positive");
  if (!(marker_drift.noise_sd >= 0.0)) throw ConfigError("marker_drift.noise_sd must be non-negative");
  if (!(marker_scale > 0.0)) throw ConfigError("marker_scale must be positive");
  require_probability(resuppress_prob, "resuppress_prob");
  require_probability(override_hazard, "override_hazard");
  // Zero dropout is allowed: it switches loss to follow-up off entirely.
  if (!(dropout_hazard >= 0.0 && dropout_hazard < 1.0)) {
    throw ConfigError(fmt::format("dropout_hazard must lie in [0, 1), got {}", dropout_hazard));
  }
  const double coefs[] = {failure_hazard.intercept,  failure_hazard.months_since_monitor,
                          failure_hazard.latent_marker, failure_hazard.age_per_decade,
                          obs_monitor.intercept,     obs_monitor.last_marker,
                          obs_monitor.months_since_monitor, obs_monitor.override_flag,
                          marker_init.mean,          marker_drift.intercept,
                          marker_drift.slope,        marker_center};
  for (double c : coefs) {
    if (!std::isfinite(c)) throw ConfigError("simulation coefficients must be finite");
  }
}

double observational_monitor_probability(const DgpParams& params, const ObservedState& state) {
  const auto& m = params.obs_monitor;
  return logistic(m.intercept + m.last_marker * (state.last_marker - params.marker_center) / params.marker_scale +
                  m.months_since_monitor * state.months_since_monitor +
                  m.override_flag * (state.override_flag ? 1.0 : 0.0));
}

CovariateSchema simulator_schema() { return CovariateSchema{{"sex", "marker_band", "age", "calendar"}}; }

Cohort simulate_cohort(const DgpParams& params, std::size_t n) {
  return run_policy(params, Policy{}, n, true).cohort;
}

Cohort simulate_forced(const DgpParams& params, const ThresholdStrategy& strategy, std::size_t n,
                       const ForcedRule& rule) {
  return simulate_forced_weighted(params, strategy, n, rule, true).cohort;
}

ForcedCohort simulate_forced_weighted(const DgpParams& params, const ThresholdStrategy& strategy, std::size_t n,
                                      const ForcedRule& rule, bool with_dropout) {
  const Policy policy = forced_policy(strategy, rule);
  return run_policy(params, policy, n, with_dropout);
}

OracleTable oracle_truth(const DgpParams& params, const StrategyGrid& grid, std::size_t n_mc,
                         const ForcedRule& rule) {
  params.validate();
  grid.validate();
  if (n_mc < 1000) throw ConfigError("oracle needs n_mc >= 1000");
  OracleTable table;
  table.rows.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t s) {
    const Policy policy = forced_policy(grid.strategies[s], rule);
    double sw = 0.0, swy = 0.0, swd = 0.0;
    std::vector<double> w(n_mc), y(n_mc), d(n_mc);
    for (std::size_t j = 0; j < n_mc; ++j) {
      const auto sim = simulate_subject(params, policy, j, false);
      w[j] = sim.path_weight;
      y[j] = static_cast<double>(sim.record.outcome_y.value_or(0));
      d[j] = static_cast<double>(sim.record.d_total);
      sw += w[j];
      swy += w[j] * y[j];
      swd += w[j] * d[j];
    }
    const double risk = swy / sw;
    const double usage = swd / sw;
    double vy = 0.0, vd = 0.0;
    for (std::size_t j = 0; j < n_mc; ++j) {
      vy += w[j] * w[j] * (y[j] - risk) * (y[j] - risk);
      vd += w[j] * w[j] * (d[j] - usage) * (d[j] - usage);
    }
    const double n = static_cast<double>(n_mc);
    const double correction = n / (n - 1.0);
    table.rows[s] = OracleRow{grid.strategies[s].x, risk, std::sqrt(vy * correction) / sw, usage,
                              std::sqrt(vd * correction) / sw};
  });
  return table;
}

}  // namespace rcds
