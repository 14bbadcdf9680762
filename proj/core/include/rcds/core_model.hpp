#pragma once

// Domain types shared by every stage of the pipeline: subject histories on a
// monthly grid, threshold strategies and their window-consistency semantics.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rcds {

inline constexpr int kDefaultHorizon = 24;

enum class EndReason { administrative_end, lost, death, other_censoring };

std::string_view to_string(EndReason reason);
std::optional<EndReason> parse_end_reason(std::string_view text);

struct TimeRow {
  int t = 0;
  bool monitor = false;
  std::optional<double> observed_marker;       // only on monitored rows
  std::optional<double> last_observed_marker;  // carried forward, baseline marker before the first visit
  int months_since_last_monitor = 0;
  bool override_flag = false;

  friend bool operator==(const TimeRow&, const TimeRow&) = default;
};

// Names of the baseline covariates, declared once per cohort.
struct CovariateSchema {
  std::vector<std::string> names;

  std::optional<std::size_t> index_of(std::string_view name) const;
  friend bool operator==(const CovariateSchema&, const CovariateSchema&) = default;
};

// Values are aligned with the cohort's CovariateSchema. Categorical fields are
// stored as their integer level codes.
struct BaselineCovariates {
  std::vector<double> values;
  friend bool operator==(const BaselineCovariates&, const BaselineCovariates&) = default;
};

struct SubjectRecord {
  std::string subject_id;
  BaselineCovariates baseline;
  std::optional<double> baseline_marker;
  std::vector<TimeRow> rows;  // t = 0..followup_end
  std::optional<int> outcome_y;
  int d_total = 0;
  int followup_end = 0;
  EndReason end_reason = EndReason::administrative_end;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

struct Cohort {
  int horizon = kDefaultHorizon;
  CovariateSchema schema;
  std::vector<SubjectRecord> subjects;

  std::size_t size() const noexcept { return subjects.size(); }
  bool empty() const noexcept { return subjects.empty(); }
  friend bool operator==(const Cohort&, const Cohort&) = default;
};

// Months since the last monitoring event as of the decision at t = 0; the
// baseline marker is taken at enrolment, immediately before month 0.
inline constexpr int kBaselineMonthsSinceMonitor = 0;

// Recomputes last_observed_marker, months_since_last_monitor and d_total from
// the monitor / observed_marker columns.
void derive_history(SubjectRecord& record);

// Returns human-readable invariant violations (empty when the record is valid).
std::vector<std::string> check_record(const SubjectRecord& record, int horizon,
                                      std::size_t n_covariates);

// The row describing the observed history just before the decision at month t:
// row t-1, or a synthetic baseline row at t = 0.
TimeRow history_before(const SubjectRecord& record, int t);

struct Window {
  int lo = 1;
  int hi = 1;
  friend bool operator==(const Window&, const Window&) = default;
};

// Monitor every [lo, hi] months: window_below while the last observed marker
// is under x, window_above once it reaches x, override_window whenever the
// override flag is set.
struct ThresholdStrategy {
  double x = 0.0;
  Window window_below{2, 7};
  Window window_above{8, 13};
  Window override_window{2, 7};

  void validate() const;
  friend bool operator==(const ThresholdStrategy&, const ThresholdStrategy&) = default;
};

struct StrategyGrid {
  std::vector<ThresholdStrategy> strategies;

  // Thresholds from..to inclusive in steps of step, sharing one set of windows.
  static StrategyGrid linear(double from, double to, double step, Window below = {2, 7},
                             Window above = {8, 13}, Window override_window = {2, 7});
  static StrategyGrid default_grid() { return linear(200.0, 500.0, 10.0); }

  void validate() const;
  std::size_t size() const noexcept { return strategies.size(); }
  bool empty() const noexcept { return strategies.empty(); }
  std::vector<double> thresholds() const;
};

Window applicable_window(const ThresholdStrategy& strategy, const TimeRow& row);

// First month whose data deviate from the strategy: the gap since the last
// monitoring event exceeds hi, or a monitoring event comes before lo.
// Returns horizon + 1 when the record is consistent through followup_end.
int consistency_horizon(const ThresholdStrategy& strategy, const SubjectRecord& record, int horizon);

}  // namespace rcds
