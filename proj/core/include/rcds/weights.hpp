#pragma once

// Monitoring-probability model on the original person-time and cumulative
// inverse-probability weights for the expanded clones.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcds/expansion.hpp"
#include "rcds/features.hpp"
#include "rcds/glm.hpp"

namespace rcds {

// History features entering the pooled logistic model for N_t. The history is
// the row before the decision (history_before), so the model sees the last
// observed marker, months since the last visit and the override flag as they
// stood when the decision was made.
struct MonitorFeatureSpec {
  enum class MarkerForm { linear, spline };
  enum class GapForm { linear, categorical };

  MarkerForm marker = MarkerForm::spline;
  std::vector<double> marker_knots;  // on the scaled marker; empty = 10/50/90th percentiles
  double marker_center = 350.0;      // marker enters as (value - center) / scale
  double marker_scale = 100.0;
  GapForm gap = GapForm::categorical;
  int gap_cap = 12;  // categorical: levels 0..cap-1 and cap+ (0 is the reference)
  bool override_flag = true;
  bool month = true;
  std::vector<BaselineTerm> baseline_terms;

  void validate() const;
};

class MonitorModel {
 public:
  // Resolves knots and baseline levels on the cohort, then fits by IRLS.
  static MonitorModel fit(const Cohort& cohort, const MonitorFeatureSpec& spec, const GlmOptions& options = {});
  // A model with given coefficients; used for fixed or hand-built models.
  static MonitorModel with_coefficients(const Cohort& cohort, const MonitorFeatureSpec& spec,
                                        Eigen::VectorXd coefficients);

  const MonitorFeatureSpec& spec() const noexcept { return spec_; }
  const GlmFit& glm() const noexcept { return fit_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t width() const noexcept { return columns_.size(); }

  // P(N_t = 1 | history) for subject record at month t.
  double probability(const SubjectRecord& record, int t) const;
  void features(const SubjectRecord& record, int t, std::span<double> out) const;

 private:
  MonitorModel(const Cohort& cohort, MonitorFeatureSpec spec);

  MonitorFeatureSpec spec_;
  std::optional<SplineBasis> marker_basis_;
  BaselineEncoder baseline_;
  std::vector<std::string> columns_;
  GlmFit fit_;
};

MonitorModel fit_monitor_model(const Cohort& cohort, const MonitorFeatureSpec& spec,
                               const GlmOptions& options = {});

enum class Numerator { one, marginal };

std::string_view to_string(Numerator numerator);
std::optional<Numerator> parse_numerator(std::string_view text);

inline constexpr double kProbabilityFloor = 1e-6;

struct WeightOptions {
  Numerator numerator = Numerator::one;
  std::optional<double> truncation_percentile;  // in (0, 100]
};

struct WeightSummary {
  double min = 0.0;
  double p01 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  double mean = 0.0;               // over horizon rows (clones reaching the horizon)
  double truncated_fraction = 0.0;  // of horizon rows
  std::optional<double> cap;
  double subject_mean = 0.0;  // mean cumulative weight at the horizon over subjects followed to it
  std::size_t horizon_rows = 0;
};

class WeightedExpandedDataset {
 public:
  WeightedExpandedDataset(std::shared_ptr<const ExpandedDataset> ds, WeightOptions options,
                          std::vector<std::size_t> offsets, std::vector<double> cumulative,
                          std::vector<double> horizon_weight, WeightSummary summary);

  const ExpandedDataset& expanded() const noexcept { return *ds_; }
  const WeightOptions& options() const noexcept { return options_; }
  const WeightSummary& summary() const noexcept { return summary_; }

  // Untruncated cumulative weight of subject at month t (t <= followup_end).
  double cumulative(std::uint32_t subject, int t) const;
  // Weight carried by a clone's row at month t; horizon rows carry the
  // truncated weight when truncation is set.
  double weight(const Clone& clone, int t) const;
  double horizon_weight(std::uint32_t subject) const { return horizon_weight_[subject]; }

 private:
  std::shared_ptr<const ExpandedDataset> ds_;
  WeightOptions options_;
  std::vector<std::size_t> offsets_;
  std::vector<double> cumulative_;
  std::vector<double> horizon_weight_;
  WeightSummary summary_;
};

// Marginal numerator: logistic on intercept + month over all person-months.
GlmFit fit_marginal_numerator(const Cohort& cohort, const GlmOptions& options = {});

WeightedExpandedDataset attach_weights(std::shared_ptr<const ExpandedDataset> ds, const MonitorModel& model,
                                       const WeightOptions& options);

}  // namespace rcds
