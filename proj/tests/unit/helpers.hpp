#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "rcds/core_model.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(RCDS_FIXTURE_DIR) / name; }

// Record with visits at the given months (month -> marker). Override switches
// on at any month listed in overrides and stays on.
inline rcds::SubjectRecord make_record(std::string id, double baseline_marker, const std::map<int, double>& visits,
                                       int followup_end, const std::set<int>& overrides = {},
                                       std::vector<double> baseline = {}) {
  rcds::SubjectRecord rec;
  rec.subject_id = std::move(id);
  rec.baseline_marker = baseline_marker;
  rec.baseline.values = std::move(baseline);
  rec.followup_end = followup_end;
  bool override_on = false;
  for (int t = 0; t <= followup_end; ++t) {
    rcds::TimeRow row;
    row.t = t;
    if (auto it = visits.find(t); it != visits.end()) {
      row.monitor = true;
      row.observed_marker = it->second;
    }
    if (overrides.count(t)) override_on = true;
    row.override_flag = override_on;
    rec.rows.push_back(row);
  }
  rcds::derive_history(rec);
  return rec;
}

// The three hand-traced subjects also committed as three_subjects.csv.
inline rcds::Cohort three_subjects() {
  rcds::Cohort c;
  c.horizon = 6;
  c.schema.names = {"sex", "age"};
  auto a = make_record("A01", 420, {{2, 380}, {5, 455}}, 6, {}, {0, 34});
  a.outcome_y = 0;
  auto b = make_record("B02", 260, {{1, 250}}, 3, {1}, {1, 51});
  b.end_reason = rcds::EndReason::lost;
  auto cc = make_record("C03", 505, {{3, 510}, {6, 300}}, 6, {6}, {0, 45.5});
  cc.outcome_y = 1;
  c.subjects = {a, b, cc};
  return c;
}

}  // namespace testing
