#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rcds {

// Machine-readable error category. The CLI maps each one to a distinct exit code.
enum class ErrorCode {
  config = 2,
  ingest = 3,
  positivity = 4,
  bootstrap_unstable = 5,
  undefined_history = 6,
  separation = 7,
  rank = 8,
  non_convergence = 9,
  schema = 10,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorCode::schema, what) {}
};

class UndefinedHistory : public Error {
 public:
  explicit UndefinedHistory(const std::string& what) : Error(ErrorCode::undefined_history, what) {}
};

// Carries every violation found (the message lists at most the first 20).
class IngestError : public Error {
 public:
  explicit IngestError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class SeparationError : public Error {
 public:
  explicit SeparationError(std::string feature);
  const std::string& feature() const noexcept { return feature_; }

 private:
  std::string feature_;
};

class RankError : public Error {
 public:
  explicit RankError(std::string column);
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

struct IrlsStep {
  int iteration = 0;
  double deviance = 0.0;
  double relative_change = 0.0;
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(std::vector<IrlsStep> trajectory);
  const std::vector<IrlsStep>& trajectory() const noexcept { return trajectory_; }

 private:
  std::vector<IrlsStep> trajectory_;
};

struct PositivityRow {
  std::string subject_id;
  int t = 0;
  double probability = 0.0;
};

class PositivityViolation : public Error {
 public:
  explicit PositivityViolation(std::vector<PositivityRow> rows);
  const std::vector<PositivityRow>& rows() const noexcept { return rows_; }

 private:
  std::vector<PositivityRow> rows_;
};

class BootstrapUnstable : public Error {
 public:
  BootstrapUnstable(int failed, int requested);
  int failed() const noexcept { return failed_; }
  int requested() const noexcept { return requested_; }

 private:
  int failed_;
  int requested_;
};

}  // namespace rcds
