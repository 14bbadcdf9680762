#include "rcds/core_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "rcds/errors.hpp"

namespace rcds {

std::string_view to_string(EndReason reason) {
  switch (reason) {
    case EndReason::administrative_end: return "administrative_end";
    case EndReason::lost: return "lost";
    case EndReason::death: return "death";
    case EndReason::other_censoring: return "other_censoring";
  }
  return "other_censoring";
}

std::optional<EndReason> parse_end_reason(std::string_view text) {
  if (text == "administrative_end") return EndReason::administrative_end;
  if (text == "lost") return EndReason::lost;
  if (text == "death") return EndReason::death;
  if (text == "other_censoring") return EndReason::other_censoring;
  return std::nullopt;
}

std::optional<std::size_t> CovariateSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

void derive_history(SubjectRecord& record) {
  std::optional<double> last = record.baseline_marker;
  int since = kBaselineMonthsSinceMonitor;
  int count = 0;
  for (auto& row : record.rows) {
    if (row.monitor) {
      ++count;
      since = 0;
      if (row.observed_marker) last = row.observed_marker;
    } else {
      ++since;
    }
    row.last_observed_marker = last;
    row.months_since_last_monitor = since;
  }
  record.d_total = count;
}

std::vector<std::string> check_record(const SubjectRecord& record, int horizon,
                                      std::size_t n_covariates) {
  std::vector<std::string> out;
  const auto& id = record.subject_id;
  if (record.followup_end < 0 || record.followup_end > horizon) {
    out.push_back(fmt::format("subject {}: followup_end {} outside 0..{}", id, record.followup_end, horizon));
  }
  if (record.rows.size() != static_cast<std::size_t>(record.followup_end) + 1) {
    out.push_back(fmt::format("subject {}: expected {} rows (t = 0..followup_end), found {}", id,
                              record.followup_end + 1, record.rows.size()));
  }
  if (record.baseline.values.size() != n_covariates) {
    out.push_back(fmt::format("subject {}: {} baseline values for a schema of {}", id,
                              record.baseline.values.size(), n_covariates));
  }
  std::optional<double> last = record.baseline_marker;
  int since = kBaselineMonthsSinceMonitor;
  int count = 0;
  for (std::size_t i = 0; i < record.rows.size(); ++i) {
    const auto& row = record.rows[i];
    if (row.t != static_cast<int>(i)) {
      out.push_back(fmt::format("subject {}: row {} has t = {} (months must run 0,1,2,... without gaps)", id, i,
                                row.t));
      break;
    }
    if (row.monitor) {
      ++count;
      since = 0;
      if (row.observed_marker) last = row.observed_marker;
    } else {
      ++since;
      if (row.observed_marker) {
        out.push_back(fmt::format("subject {} t {}: observed_marker recorded on an unmonitored month", id, row.t));
      }
    }
    if (row.months_since_last_monitor != since) {
      out.push_back(fmt::format("subject {} t {}: months_since_last_monitor is {}, expected {}", id, row.t,
                                row.months_since_last_monitor, since));
    }
    if (row.last_observed_marker != last) {
      out.push_back(fmt::format("subject {} t {}: last_observed_marker does not carry forward the latest observation",
                                id, row.t));
    }
  }
  if (record.d_total != count) {
    out.push_back(fmt::format("subject {}: d_total {} but {} monitored rows", id, record.d_total, count));
  }
  if (record.outcome_y && record.followup_end != horizon) {
    out.push_back(fmt::format("subject {}: outcome_y present but follow-up ended at {} < horizon {}", id,
                              record.followup_end, horizon));
  }
  if (!record.outcome_y && record.followup_end == horizon) {
    out.push_back(fmt::format("subject {}: followed to the horizon but outcome_y is missing", id));
  }
  if (record.outcome_y && *record.outcome_y != 0 && *record.outcome_y != 1) {
    out.push_back(fmt::format("subject {}: outcome_y must be 0 or 1", id));
  }
  return out;
}

TimeRow history_before(const SubjectRecord& record, int t) {
  if (t > 0) return record.rows[static_cast<std::size_t>(t - 1)];
  TimeRow base;
  base.t = -1;
  base.last_observed_marker = record.baseline_marker;
  base.months_since_last_monitor = kBaselineMonthsSinceMonitor;
  return base;
}

namespace {

void check_window(const Window& w, std::string_view name) {
  if (w.lo < 1 || w.lo > w.hi) {
    throw ConfigError(fmt::format("{} window ({}, {}) must satisfy 1 <= lo <= hi", name, w.lo, w.hi));
  }
}

}  // namespace

void ThresholdStrategy::validate() const {
  if (!std::isfinite(x)) throw ConfigError("strategy threshold must be finite");
  check_window(window_below, "below-threshold");
  check_window(window_above, "above-threshold");
  check_window(override_window, "override");
  if (window_below.hi > window_above.hi) {
    throw ConfigError("below-threshold window must not allow longer gaps than the above-threshold window");
  }
}

StrategyGrid StrategyGrid::linear(double from, double to, double step, Window below, Window above,
                                  Window override_window) {
  if (!(step > 0.0) || to < from) throw ConfigError("strategy grid needs step > 0 and to >= from");
  StrategyGrid grid;
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
  for (long i = 0; i < n; ++i) {
    grid.strategies.push_back({from + static_cast<double>(i) * step, below, above, override_window});
  }
  return grid;
}

void StrategyGrid::validate() const {
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    strategies[i].validate();
    if (i > 0 && !(strategies[i].x > strategies[i - 1].x)) {
      throw ConfigError("strategy thresholds must be strictly increasing");
    }
  }
}

std::vector<double> StrategyGrid::thresholds() const {
  std::vector<double> xs;
  xs.reserve(strategies.size());
  for (const auto& s : strategies) xs.push_back(s.x);
  return xs;
}

Window applicable_window(const ThresholdStrategy& strategy, const TimeRow& row) {
  if (row.override_flag) return strategy.override_window;
  if (!row.last_observed_marker) {
    throw UndefinedHistory(fmt::format("no marker observed by month {} and no baseline value", row.t));
  }
  return *row.last_observed_marker < strategy.x ? strategy.window_below : strategy.window_above;
}

int consistency_horizon(const ThresholdStrategy& strategy, const SubjectRecord& record, int horizon) {
  const int last = std::min(record.followup_end, static_cast<int>(record.rows.size()) - 1);
  for (int m = 0; m <= last; ++m) {
    const TimeRow before = history_before(record, m);
    const Window w = applicable_window(strategy, before);
    const int gap = before.months_since_last_monitor + 1;
    if (gap > w.hi) return m;
    if (record.rows[static_cast<std::size_t>(m)].monitor && gap < w.lo) return m;
  }
  return horizon + 1;
}

}  // namespace rcds
