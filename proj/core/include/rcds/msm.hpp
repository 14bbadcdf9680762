#pragma once

// Dose-response MSMs over the strategy threshold (risk and monitoring usage at
// the horizon), baseline standardisation and the subject-level bootstrap.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcds/expansion.hpp"
#include "rcds/features.hpp"
#include "rcds/glm.hpp"
#include "rcds/weights.hpp"

namespace rcds {

struct MsmSpec {
  std::vector<double> strategy_knots;  // empty = 5/35/65/95th percentiles of the grid
  std::vector<BaselineTerm> baseline_terms;
  Family outcome_family = Family::poisson_log;
  Family resource_family = Family::poisson_log;

  static MsmSpec default_spec();
};

// A fitted MSM together with the basis needed to evaluate it.
struct MsmFit {
  GlmFit glm;
  SplineBasis strategy_basis{std::vector<double>{0.0, 1.0, 2.0}};
  BaselineEncoder baseline;
  std::vector<std::string> warnings;  // e.g. DegenerateResponse
  std::size_t rows = 0;

  std::size_t width() const noexcept { return 1 + strategy_basis.columns() + baseline.width(); }
  void design_row(double x, const BaselineCovariates& covariates, std::span<double> out) const;
  double predict(double x, const BaselineCovariates& covariates) const;
};

MsmFit fit_outcome_msm(const WeightedExpandedDataset& wds, const MsmSpec& spec, const GlmOptions& options = {});
MsmFit fit_resource_msm(const WeightedExpandedDataset& wds, const MsmSpec& spec, const GlmOptions& options = {});

// Mean prediction over every subject's baseline covariates at each x.
std::vector<double> standardize(const MsmFit& fit, const Cohort& cohort, std::span<const double> xs);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct DoseResponseRow {
  double x = 0.0;
  double risk = 0.0;
  double usage = 0.0;
  std::size_t n_atrisk = 0;
  std::optional<Interval> ci_risk;
  std::optional<Interval> ci_usage;
  std::optional<double> se_risk;
  std::optional<double> se_usage;
};

struct BootstrapInfo {
  int requested = 0;
  int failed = 0;
  std::vector<std::vector<double>> risk;   // [replicate][x], successful replicates in index order
  std::vector<std::vector<double>> usage;
  std::vector<Eigen::VectorXd> monitor_coefficients;
};

struct DoseResponseTable {
  std::vector<DoseResponseRow> rows;  // grid order
  std::optional<BootstrapInfo> bootstrap;

  bool has_intervals() const noexcept { return bootstrap.has_value(); }
};

struct AnalysisOptions {
  MonitorFeatureSpec monitor;
  WeightOptions weights;
  MsmSpec msm = MsmSpec::default_spec();
  GlmOptions glm;
  // Replace every estimated weight by 1 (diagnostic; unweighted MSMs).
  bool unit_weights = false;
};

struct Estimate {
  DoseResponseTable table;
  WeightSummary weights;
  Eigen::VectorXd monitor_coefficients;
  std::vector<std::string> monitor_columns;
  MsmFit outcome;
  MsmFit resource;
  std::vector<std::string> warnings;
};

// Point estimate: expand, fit the monitoring model, weight, fit both MSMs,
// standardise.
Estimate estimate(std::shared_ptr<const Cohort> cohort, const StrategyGrid& grid, const AnalysisOptions& options);

inline constexpr std::uint64_t kBootstrapStream = 0xb007;

// B subject-level resamples of the whole pipeline; percentile 2.5/97.5
// intervals attached to the point estimate's table. Replicates failing with a
// model error are skipped; more than 5% failures raise BootstrapUnstable.
Estimate bootstrap_pipeline(std::shared_ptr<const Cohort> cohort, const StrategyGrid& grid,
                            const AnalysisOptions& options, int replicates, std::uint64_t seed);

// Resample of n subjects drawn with replacement.
Cohort resample_subjects(const Cohort& cohort, std::uint64_t seed);

}  // namespace rcds
