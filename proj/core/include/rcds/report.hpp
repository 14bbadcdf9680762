#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rcds/msm.hpp"
#include "rcds/optimizer.hpp"
#include "rcds/simulator.hpp"

namespace rcds {

std::vector<StrategyPoint> points(const DoseResponseTable& table);

// Report CSV in descending x: x, risk[, risk_lo, risk_hi], usage[, usage_lo,
// usage_hi][, feasible]. Interval columns appear only when the table carries
// bootstrap intervals, feasible only when kappa is given.
void write_report_csv(const DoseResponseTable& table, std::optional<double> kappa, std::ostream& out);

// Reads any report CSV written above (only x, risk and usage are required).
DoseResponseTable read_report_csv(std::istream& in);
DoseResponseTable read_report_csv(const std::filesystem::path& path);

void write_truth_csv(const OracleTable& truth, std::ostream& out);
OracleTable read_truth_csv(std::istream& in);

// Selection, frontier and weight diagnostics as pretty-printed JSON.
std::string selection_json(const ConstrainedSelection& selection);
std::string frontier_json(const Frontier& frontier);
std::string diagnostics_json(const Estimate& estimate);

// Writes text to path; throws ConfigError if the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rcds
