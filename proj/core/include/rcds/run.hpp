#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rcds/run_config.hpp"

namespace rcds {

// Monitoring probabilities per month from an intercept + month logistic fitted
// on an observational simulation of n subjects.
std::vector<double> calibrate_monitor_prob(const DgpParams& params, std::size_t n);

ForcedRule oracle_rule(const RunConfig& config);
OracleTable compute_oracle(const RunConfig& config);

struct CoverageResult {
  double x = 0.0;
  double truth = 0.0;
  int cohorts = 0;
  int covered = 0;
  int failed = 0;  // cohorts whose bootstrap raised BootstrapUnstable

  double coverage() const { return cohorts > failed ? static_cast<double>(covered) / (cohorts - failed) : 0.0; }
};

CoverageResult run_coverage(const RunConfig& config, const OracleTable& truth, std::ostream& log);

struct RunResult {
  int exit_code = 0;
  std::vector<std::filesystem::path> artifacts;
};

// Executes config.mode and writes its artifacts under config.output_dir.
// Errors propagate as rcds::Error; progress lines go to log.
RunResult run(const RunConfig& config, std::ostream& log);

}  // namespace rcds
