#pragma once

// Cohort CSV: one row per subject-month.
//   subject_id, t, monitor, observed_marker, last_observed_marker,
//   months_since_last_monitor, override_flag, followup_end, end_reason,
//   outcome_y, marker_baseline, baseline_<name>...
// observed_marker is empty on unmonitored months, outcome_y is filled on the
// subject's last row only, and baseline columns repeat on every row.
// last_observed_marker, months_since_last_monitor and marker_baseline are
// optional on input; when present they are checked against the derived values.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rcds/core_model.hpp"
#include "rcds/expansion.hpp"

namespace rcds {

void write_cohort_csv(const Cohort& cohort, std::ostream& out);
void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path);

// Throws IngestError listing every violation (with line numbers) when the
// file does not describe a valid cohort.
Cohort read_cohort_csv(std::istream& in, int horizon = kDefaultHorizon);
Cohort ingest_cohort(const std::filesystem::path& path, int horizon = kDefaultHorizon);

// Columnar audit dump of the expanded dataset:
//   subject_id, x, t, at_risk, censored, response_y, response_d
void write_expanded_csv(const ExpandedDataset& ds, std::ostream& out);

}  // namespace rcds
