#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcds/msm.hpp"
#include "rcds/simulator.hpp"

namespace rcds {

enum class Mode { simulate, oracle, analyze, frontier, coverage };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct GridSpec {
  double from = 200.0;
  double to = 500.0;
  double step = 10.0;
  Window window_below{2, 7};
  Window window_above{8, 13};
  Window override_window{2, 7};

  StrategyGrid build() const;
};

struct OracleSpec {
  std::size_t n_mc = 100000;
  // "earliest" or "within_window"
  std::string rule = "earliest";
  // within_window: explicit per-month probabilities, or empty to calibrate the
  // intercept + month logistic on an observational simulation of calibration_n.
  std::vector<double> monitor_prob;
  std::size_t calibration_n = 20000;
};

struct CoverageSpec {
  int cohorts = 200;
  std::size_t n = 2000;
  int bootstrap = 200;
  double x = 350.0;
  std::optional<std::filesystem::path> truth;  // truth CSV; computed when absent
};

struct RunConfig {
  Mode mode = Mode::analyze;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> input;   // cohort CSV (analyze, frontier)
  std::optional<std::filesystem::path> report;  // report CSV (frontier)
  std::filesystem::path output_dir = "out";
  int horizon = kDefaultHorizon;
  std::size_t n_subjects = 20000;  // simulate, and analyze without input
  DgpParams dgp;
  GridSpec grid;
  AnalysisOptions analysis;
  std::optional<double> kappa;
  std::vector<double> kappa_grid;
  int bootstrap = 0;
  OracleSpec oracle;
  CoverageSpec coverage;

  // Throws ConfigError for inconsistent settings, including a missing seed.
  void validate() const;
};

// Parses a JSON document (comments allowed). Unknown keys are errors.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

std::string dgp_to_json(const DgpParams& params);
DgpParams dgp_from_json(std::string_view text);

}  // namespace rcds
