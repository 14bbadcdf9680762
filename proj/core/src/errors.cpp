#include "rcds/errors.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace rcds {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return "CONFIG_ERROR";
    case ErrorCode::ingest: return "INGEST_ERROR";
    case ErrorCode::positivity: return "POSITIVITY_VIOLATION";
    case ErrorCode::bootstrap_unstable: return "BOOTSTRAP_UNSTABLE";
    case ErrorCode::undefined_history: return "UNDEFINED_HISTORY";
    case ErrorCode::separation: return "SEPARATION";
    case ErrorCode::rank: return "RANK_DEFICIENT";
    case ErrorCode::non_convergence: return "NON_CONVERGENCE";
    case ErrorCode::schema: return "SCHEMA_ERROR";
  }
  return "UNKNOWN";
}

namespace {

constexpr std::size_t kMaxListed = 20;

std::string ingest_message(const std::vector<std::string>& violations) {
  std::string msg = fmt::format("cohort ingestion failed with {} violation(s)", violations.size());
  for (std::size_t i = 0; i < std::min(violations.size(), kMaxListed); ++i) {
    msg += "\n  " + violations[i];
  }
  return msg;
}

std::string positivity_message(const std::vector<PositivityRow>& rows) {
  std::string msg = fmt::format(
      "{} person-month(s) have an estimated probability of the observed monitoring decision below the floor",
      rows.size());
  for (std::size_t i = 0; i < std::min(rows.size(), kMaxListed); ++i) {
    msg += fmt::format("\n  subject {} month {}: p = {:.3g}", rows[i].subject_id, rows[i].t,
                       rows[i].probability);
  }
  return msg;
}

std::string convergence_message(const std::vector<IrlsStep>& trajectory) {
  std::string msg = fmt::format("IRLS did not converge after {} iteration(s)", trajectory.size());
  if (!trajectory.empty()) {
    const auto& last = trajectory.back();
    msg += fmt::format(" (last deviance {:.10g}, relative change {:.3g})", last.deviance,
                       last.relative_change);
  }
  return msg;
}

}  // namespace

IngestError::IngestError(std::vector<std::string> violations)
    : Error(ErrorCode::ingest, ingest_message(violations)), violations_(std::move(violations)) {}

SeparationError::SeparationError(std::string feature)
    : Error(ErrorCode::separation,
            fmt::format("monitoring model is separated: '{}' perfectly predicts monitoring", feature)),
      feature_(std::move(feature)) {}

RankError::RankError(std::string column)
    : Error(ErrorCode::rank,
            fmt::format("design matrix is rank deficient: column '{}' is linearly dependent on earlier columns",
                        column)),
      column_(std::move(column)) {}

NonConvergence::NonConvergence(std::vector<IrlsStep> trajectory)
    : Error(ErrorCode::non_convergence, convergence_message(trajectory)),
      trajectory_(std::move(trajectory)) {}

PositivityViolation::PositivityViolation(std::vector<PositivityRow> rows)
    : Error(ErrorCode::positivity, positivity_message(rows)), rows_(std::move(rows)) {}

BootstrapUnstable::BootstrapUnstable(int failed, int requested)
    : Error(ErrorCode::bootstrap_unstable,
            fmt::format("{} of {} bootstrap replicates failed (more than 5%)", failed, requested)),
      failed_(failed),
      requested_(requested) {}

}  // namespace rcds
